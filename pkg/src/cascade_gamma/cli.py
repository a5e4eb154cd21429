"""Command line front end.

Subcommands mirror the library surface: density, pmf, moments,
extinction, simulate, verify.  Exit codes: 0 success, 2 usage or
domain errors, 3 numerical failures (tolerance not met, convergence
lost, verification residual above tolerance).  CSV payloads carry '#'
comment lines echoing the parameters, a fixed header, floats with 17
significant digits and LF line endings; JSON payloads use sorted keys.
Outputs are byte-reproducible for identical invocations.

Every option may instead be given in a --config file of `key = value`
lines (keys match the long option names without the leading dashes);
setting the same option in both places is an error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from . import continuum, discrete, simulate
from .errors import (
    CascadeError,
    ConvergenceError,
    CriticalityError,
    DomainError,
    NoSignChangeError,
    ToleranceError,
)

__all__ = ["main", "entrypoint"]

_ROUTE_GAP_TOL = 1e-10


class _UsageError(Exception):
    pass


def _real(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("expected a finite real number")
    return value


def _integer(text: str) -> int:
    return int(text, 10)


def _choice(*options: str) -> Callable[[str], str]:
    def convert(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of: {', '.join(options)}")
        return text

    convert.__name__ = "|".join(options)
    return convert


@dataclass(frozen=True)
class _Option:
    dest: str
    flag: str
    convert: Callable[[str], object]
    default: object = None
    required: bool = False
    help: str = ""


def _opt_p() -> _Option:
    return _Option("p", "--p", _real, required=True, help="offspring scale p > 0")


def _opt_out() -> _Option:
    return _Option("out", "--out", str, default="-", help="output path, or - for stdout")


def _opt_format(default: str) -> _Option:
    return _Option(
        "format", "--format", _choice("csv", "json"), default=default,
        help=f"output format (default {default})",
    )


def _float_cell(value) -> str:
    return format(float(value), ".17g")


def _csv_text(comments: list[str], header: list[str], rows) -> str:
    buffer = io.StringIO()
    for line in comments:
        buffer.write(f"# {line}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8", newline="")


def _cmd_density(ns) -> int:
    params = continuum.ModelParams(ns.p)
    table = continuum.density_table(params, ns.x_min, ns.x_max, ns.steps)
    if ns.format == "csv":
        comments = [
            "cascade-gamma density",
            f"p = {params.p!r}",
            f"x-min = {ns.x_min!r}",
            f"x-max = {ns.x_max!r}",
            f"steps = {ns.steps!r}",
        ]
        rows = [
            [_float_cell(x), _float_cell(d), _float_cell(a)]
            for x, d, a in zip(table.x, table.density, table.asymptotic)
        ]
        text = _csv_text(comments, ["x", "density", "asymptotic"], rows)
    else:
        text = _json_text(
            {
                "p": params.p,
                "x_min": ns.x_min,
                "x_max": ns.x_max,
                "steps": ns.steps,
                "x": [float(v) for v in table.x],
                "density": [float(v) for v in table.density],
                "asymptotic": [float(v) for v in table.asymptotic],
            }
        )
    _emit(text, ns.out)
    return 0


def _cmd_pmf(ns) -> int:
    params = discrete.DiscretizationParams(ns.p, ns.m)
    table = discrete.cascade_pmf_table(params, params.m, n_max=ns.n_max)
    rescaled = [params.m * float(prob) for prob in table.probabilities]
    if ns.format == "csv":
        comments = [
            "cascade-gamma pmf",
            f"p = {params.p!r}",
            f"m = {params.m!r}",
            f"delta = {params.delta!r}",
            f"r-star = {params.r_star!r}",
            f"q-star = {params.q_star!r}",
            f"tail-bound = {table.tail_bound!r}",
            f"truncated = {str(table.truncated).lower()}",
        ]
        rows = [
            [str(int(n)), _float_cell(prob), _float_cell(scaled)]
            for n, prob, scaled in zip(table.n_values, table.probabilities, rescaled)
        ]
        text = _csv_text(comments, ["n", "pmf", "rescaled_density"], rows)
        text += f"# cumulative-mass = {table.total_mass!r}\n"
    else:
        text = _json_text(
            {
                "p": params.p,
                "m": params.m,
                "delta": params.delta,
                "r_star": params.r_star,
                "q_star": params.q_star,
                "n_start": params.m,
                "pmf": [float(v) for v in table.probabilities],
                "rescaled_density": rescaled,
                "cumulative_mass": table.total_mass,
                "tail_bound": table.tail_bound,
                "truncated": table.truncated,
            }
        )
    _emit(text, ns.out)
    return 0


def _cmd_moments(ns) -> int:
    params = continuum.ModelParams(ns.p)
    result = continuum.moments(params)
    payload = {"p": params.p, "mean": result.mean, "variance": result.variance}
    header = ["p", "mean", "variance"]
    row = [_float_cell(params.p), _float_cell(result.mean), _float_cell(result.variance)]
    if ns.m is not None:
        dparams = discrete.DiscretizationParams(ns.p, ns.m)
        dmoments = discrete.discrete_moments(dparams)
        payload["m"] = dparams.m
        payload["delta"] = dparams.delta
        payload["per_atom"] = {
            "mean": dmoments.per_atom.mean,
            "variance": dmoments.per_atom.variance,
        }
        payload["total"] = {
            "mean": dmoments.total.mean,
            "variance": dmoments.total.variance,
        }
        header += ["m", "delta", "per_atom_mean", "per_atom_variance", "total_mean", "total_variance"]
        row += [
            str(dparams.m),
            _float_cell(dparams.delta),
            _float_cell(dmoments.per_atom.mean),
            _float_cell(dmoments.per_atom.variance),
            _float_cell(dmoments.total.mean),
            _float_cell(dmoments.total.variance),
        ]
    if ns.format == "csv":
        text = _csv_text(["cascade-gamma moments"], header, [row])
    else:
        text = _json_text(payload)
    _emit(text, ns.out)
    return 0


def _cmd_extinction(ns) -> int:
    params = continuum.ModelParams(ns.p)
    report = continuum.extinction(params)
    fixed_point = continuum.extinction_gap_root(params)
    payload = {
        "p": params.p,
        "decay_gap": report.decay_gap,
        "log_prob_finite": report.log_prob_finite,
        "prob_finite": report.prob_finite,
        "decay_gap_fixed_point": fixed_point,
        "route_gap": abs(report.decay_gap - fixed_point),
    }
    if ns.format == "csv":
        header = list(payload)
        row = [_float_cell(payload[key]) for key in header]
        text = _csv_text(["cascade-gamma extinction"], header, [row])
    else:
        text = _json_text(payload)
    _emit(text, ns.out)
    return 0


def _histogram_csv(summary: simulate.SimSummary) -> str:
    config = summary.config
    comments = [
        "cascade-gamma simulate histogram",
        f"mode = {config.mode}",
        f"p = {config.p!r}",
        f"m = {config.m!r}",
        f"trials = {config.trials!r}",
        f"seed = {config.seed!r}",
        f"cap = {config.cap!r}",
        f"epsilon = {config.epsilon!r}",
        f"workers = {config.workers!r}",
        f"n-finite = {summary.n_finite!r}",
        f"n-censored = {summary.n_censored!r}",
        f"mean = {summary.mean!r}",
        f"variance = {summary.variance!r}",
    ]
    edges = simulate.HIST_EDGES
    rows = [
        [_float_cell(edges[i]), _float_cell(edges[i + 1]), str(int(count))]
        for i, count in enumerate(summary.bin_counts)
    ]
    rows.append([_float_cell(simulate.HIST_HI), "inf", str(summary.overflow)])
    return _csv_text(comments, ["bin_lo", "bin_hi", "count"], rows)


def _cmd_simulate(ns) -> int:
    config = simulate.SimConfig(
        mode=ns.mode,
        p=ns.p,
        trials=ns.trials,
        seed=ns.seed,
        m=ns.m,
        cap=ns.cap,
        epsilon=ns.epsilon,
        workers=ns.workers,
    )
    summary = simulate.run_campaign(config)
    if ns.hist_out is not None:
        _emit(_histogram_csv(summary), ns.hist_out)
    if ns.format == "csv":
        text = _histogram_csv(summary)
    else:
        text = _json_text(summary.to_json_dict())
    _emit(text, ns.out)
    fraction_se = math.sqrt(
        max(summary.finite_fraction * (1.0 - summary.finite_fraction), 0.0) / summary.trials
    )
    print(
        f"cascade-gamma simulate: mean = {summary.mean!r} +- {summary.se_mean!r}, "
        f"finite fraction = {summary.finite_fraction!r} +- {fraction_se!r}, "
        f"censored = {summary.n_censored}",
        file=sys.stderr,
    )
    return 0


def _cmd_verify(ns) -> int:
    params = continuum.ModelParams(ns.p)
    lambert_report = continuum.extinction(params)
    fixed_point = continuum.extinction_gap_root(params)
    root_target = math.exp(-fixed_point)
    payload = {
        "p": params.p,
        "abs_tol": ns.abs_tol,
        "lambert_target": lambert_report.prob_finite,
        "root_target": root_target,
        "route_gap": abs(lambert_report.decay_gap - fixed_point),
    }
    try:
        check = continuum.verify_normalization(params, abs_tol=ns.abs_tol)
    except ToleranceError as exc:
        payload["error"] = str(exc)
        if exc.result is not None:
            payload["integral"] = exc.result.value
            payload["quadrature_error"] = exc.result.abs_error_estimate
        payload["passed"] = False
        _emit(_json_text(payload), ns.out)
        return 3
    payload["integral"] = check.integral
    payload["x_max"] = check.x_max
    payload["tail_estimate"] = check.tail_estimate
    payload["quadrature_error"] = check.quadrature.abs_error_estimate
    payload["quadrature_evaluations"] = check.quadrature.evaluations
    residual_lambert = abs(check.integral - lambert_report.prob_finite)
    residual_root = abs(check.integral - root_target)
    payload["residual_vs_lambert"] = residual_lambert
    payload["residual_vs_root"] = residual_root
    passed = (
        residual_lambert <= ns.abs_tol
        and residual_root <= ns.abs_tol
        and payload["route_gap"] <= _ROUTE_GAP_TOL
    )
    payload["passed"] = passed
    if ns.format == "csv":
        header = sorted(k for k in payload if k != "passed") + ["passed"]
        row = [
            str(payload[key]).lower() if isinstance(payload[key], bool) else _float_cell(payload[key])
            for key in header
        ]
        text = _csv_text(["cascade-gamma verify"], header, [row])
    else:
        text = _json_text(payload)
    _emit(text, ns.out)
    return 0 if passed else 3


_COMMANDS: dict[str, dict] = {
    "density": {
        "help": "tabulate the exact density and its tail asymptote",
        "handler": _cmd_density,
        "options": [
            _opt_p(),
            _Option("x_min", "--x-min", _real, default=1.0, help="grid start (>= 1)"),
            _Option("x_max", "--x-max", _real, default=20.0, help="grid end"),
            _Option("steps", "--steps", _integer, default=200, help="grid points (>= 2)"),
            _opt_format("csv"),
            _opt_out(),
        ],
    },
    "pmf": {
        "help": "tabulate the atomized cascade-size pmf",
        "handler": _cmd_pmf,
        "options": [
            _opt_p(),
            _Option("m", "--m", _integer, required=True, help="atoms per unit mass (1/m < p)"),
            _Option("n_max", "--n-max", _integer, help="last count to tabulate (default: auto)"),
            _opt_format("csv"),
            _opt_out(),
        ],
    },
    "moments": {
        "help": "subcritical mean and variance (optionally the finite-delta ones)",
        "handler": _cmd_moments,
        "options": [
            _opt_p(),
            _Option("m", "--m", _integer, help="also report the atomized moments for this m"),
            _opt_format("json"),
            _opt_out(),
        ],
    },
    "extinction": {
        "help": "finite-cascade probability by two independent routes",
        "handler": _cmd_extinction,
        "options": [
            _opt_p(),
            _opt_format("json"),
            _opt_out(),
        ],
    },
    "simulate": {
        "help": "run a Monte Carlo campaign",
        "handler": _cmd_simulate,
        "options": [
            _Option("mode", "--mode", _choice("continuous", "discrete", "walk"),
                    required=True, help="engine"),
            _opt_p(),
            _Option("trials", "--trials", _integer, required=True, help="number of trials"),
            _Option("seed", "--seed", _integer, required=True, help="64-bit campaign seed"),
            _Option("m", "--m", _integer, help="atoms per unit mass (discrete/walk)"),
            _Option("cap", "--cap", _real, default=1e6, help="censoring cap on total mass"),
            _Option("epsilon", "--epsilon", _real, default=1e-9,
                    help="continuous stopping threshold"),
            _Option("workers", "--workers", _integer, default=1, help="process count"),
            _opt_format("json"),
            _opt_out(),
            _Option("hist_out", "--hist-out", str, help="also write the histogram CSV here"),
        ],
    },
    "verify": {
        "help": "integrate the density and compare with the extinction routes",
        "handler": _cmd_verify,
        "options": [
            _opt_p(),
            _Option("abs_tol", "--abs-tol", _real, default=1e-6, help="residual tolerance"),
            _opt_format("json"),
            _opt_out(),
        ],
    },
}


def _build_parser() -> tuple[argparse.ArgumentParser, dict[str, dict[str, _Option]]]:
    parser = argparse.ArgumentParser(
        prog="cascade-gamma",
        description="cascade-size distribution of a branching process with Gamma(2, p) generations",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    registries: dict[str, dict[str, _Option]] = {}
    for name, entry in _COMMANDS.items():
        sub = subparsers.add_parser(name, help=entry["help"])
        sub.add_argument(
            "--config", default=None, metavar="FILE",
            help="read options from a key = value file",
        )
        table: dict[str, _Option] = {}
        for opt in entry["options"]:
            sub.add_argument(opt.flag, dest=opt.dest, type=opt.convert,
                             default=None, help=opt.help)
            table[opt.dest] = opt
        sub.set_defaults(handler=entry["handler"], command=name)
        registries[name] = table
    return parser, registries


def _apply_config(ns, table: dict[str, _Option]) -> None:
    if not ns.config:
        return
    try:
        text = Path(ns.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise _UsageError(f"cannot read config file {ns.config!r}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise _UsageError(f"{ns.config}:{lineno}: expected key = value")
        key, value = key.strip(), value.strip()
        dest = key.replace("-", "_")
        if dest not in table:
            raise _UsageError(f"{ns.config}:{lineno}: unknown option {key!r}")
        if getattr(ns, dest) is not None:
            raise _UsageError(
                f"option --{key} is set more than once (command line or config)"
            )
        try:
            setattr(ns, dest, table[dest].convert(value))
        except (TypeError, ValueError) as exc:
            raise _UsageError(
                f"{ns.config}:{lineno}: bad value {value!r} for {key!r}: {exc}"
            ) from exc


def _fill_defaults(ns, table: dict[str, _Option]) -> None:
    for dest, opt in table.items():
        if getattr(ns, dest) is None:
            if opt.required:
                raise _UsageError(f"missing required option {opt.flag}")
            setattr(ns, dest, opt.default)


def main(argv: list[str] | None = None) -> int:
    parser, registries = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    table = registries[ns.command]
    try:
        _apply_config(ns, table)
        _fill_defaults(ns, table)
    except _UsageError as exc:
        print(f"cascade-gamma {ns.command}: {exc}", file=sys.stderr)
        return 2
    try:
        return ns.handler(ns)
    except (DomainError, CriticalityError) as exc:
        print(f"cascade-gamma {ns.command}: {exc}", file=sys.stderr)
        return 2
    except (ToleranceError, ConvergenceError, NoSignChangeError) as exc:
        print(f"cascade-gamma {ns.command}: {exc}", file=sys.stderr)
        return 3
    except CascadeError as exc:
        print(f"cascade-gamma {ns.command}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"cascade-gamma {ns.command}: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
