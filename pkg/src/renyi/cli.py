"""Command-line driver: model zoo posteriors, window gluing and the paradox tables.

Exit codes: 0 success, 2 usage or model error, 3 undetermined numerical
verdict, 4 window alignment failure.
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
from typing import Sequence

import numpy as np

from .bayes import UndeterminedMassError, classify_posterior, kernel_state, posterior_state
from .glue import AlignmentError, ChainConfig, WindowScheme, diagnostics_json, run_glue, write_csv
from .measure import DEFAULT_TOL, MassValue, NotElementaryError, normalize_on_window, window_mass
from .paradox import (focus_test_limit, improper_test_probability, marginalization_pair,
                      route_a_by_quadrature, test_statistic_curve)
from .windows import WindowSet
from .zoo import MODELS, build_model

EXIT_OK, EXIT_USAGE, EXIT_UNDETERMINED, EXIT_ALIGNMENT = 0, 2, 3, 4


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    """Resolved options for one invocation (flags over config file over defaults)."""

    subcommand: str
    seed: int = 0
    tol: float = DEFAULT_TOL
    out: str | None = None

    def __post_init__(self):
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be a 64-bit unsigned integer")
        if not 0 < self.tol < 1:
            raise UsageError("--tol must lie in (0, 1)")


# ---------------------------------------------------------------------------
# value parsing


def _float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _floats(text: str) -> list[float]:
    try:
        return [_float(t) for t in text.split(",") if t.strip()]
    except argparse.ArgumentTypeError as e:
        raise UsageError(str(e)) from None


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def parse_window(text: str, dim: int) -> WindowSet:
    """``lo,hi`` for 1-D; ``xlo,xhi;ylo,yhi`` for 2-D; ``inf`` allowed."""
    parts = [p for p in text.split(";") if p.strip()]
    if len(parts) != dim:
        raise UsageError(f"window {text!r} does not have {dim} axis range(s)")
    ranges = []
    for p in parts:
        v = _floats(p)
        if len(v) != 2 or not v[0] < v[1]:
            raise UsageError(f"bad range {p!r}; expected lo,hi with lo < hi")
        ranges.append((v[0], v[1]))
    return WindowSet.interval(*ranges[0]) if dim == 1 else WindowSet.box(*ranges)


def parse_data(model_name: str, text: str):
    kind = MODELS[model_name].data_kind
    if kind == "count":
        try:
            v = int(text)
        except ValueError:
            raise UsageError(f"model {model_name!r} takes count data, got {text!r}") from None
        return v
    vals = _floats(text)
    if kind == "pair":
        if len(vals) != 2:
            raise UsageError("pair data is given as x,z")
        return tuple(vals)
    if len(vals) != 1:
        raise UsageError(f"model {model_name!r} takes one real observation")
    return vals[0]


def _grid_spec(text: str) -> np.ndarray:
    """``start:stop:num`` (inclusive linspace) or a comma list."""
    if ":" in text:
        a, b, n = text.split(":")
        return np.linspace(_float(a), _float(b), int(n))
    return np.array(_floats(text))


def _schedule(text: str) -> list[float]:
    return _floats(text)


def _mass_json(m: MassValue) -> dict:
    return {"status": m.status, "log_value": _num(m.log_value), "value": _num(m.value),
            "rel_error": _num(m.rel_error), "notes": list(m.notes)}


def _num(v: float):
    v = float(v)
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def _emit(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _json(d: dict) -> str:
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# subcommands


def _model_params(args) -> dict:
    entry = MODELS[args.model]
    given = {k: getattr(args, k) for k in ("t", "n") if getattr(args, k, None) is not None}
    extra = set(given) - set(entry.params)
    if extra:
        raise UsageError(f"model {args.model!r} takes no parameter(s) {sorted(extra)}")
    return given


def cmd_posterior(cfg: RunConfig, args) -> int:
    model = build_model(args.model, **_model_params(args))
    x = parse_data(args.model, args.x)
    cls = classify_posterior(model, x, cfg.tol)
    report = {"model": model.label, "x": x, "verdict": cls.verdict,
              "mass": _mass_json(cls.mass), "data_marginal_at_x": _mass_json(cls.data_marginal_at_x)}
    if args.window is not None:
        state = kernel_state(model, x)
        w = parse_window(args.window, model.param_base.dim)
        wm = window_mass(state, w, cfg.tol)
        if wm.is_undetermined:
            raise UndeterminedMassError(f"window {args.window}", wm)
        report["window"] = w.to_dict()
        report["window_mass"] = _mass_json(wm)
        if args.table:
            if model.param_base.dim != 1:
                raise UsageError("--table is only available for 1-D parameters")
            lo, hi = w.include[0][0]
            if not (np.isfinite(lo) and np.isfinite(hi)):
                raise UsageError("--table needs a bounded window")
            normed = normalize_on_window(state, w, cfg.tol)
            grid = np.linspace(lo, hi, args.table + 2)[1:-1]
            report["table"] = {"theta": grid.tolist(), "density": np.exp(normed.logpdf(grid)).tolist()}
    _emit(_json(report), cfg.out)
    return EXIT_OK


def cmd_glue(cfg: RunConfig, args) -> int:
    model = build_model(args.model, **_model_params(args))
    if model.param_base.dim != 1:
        raise UsageError("gluing needs a 1-D parameter model")
    x = parse_data(args.model, args.x)
    target = posterior_state(model, x)
    if args.coordinate == "log":
        scheme = WindowScheme.log_spaced(args.lo, args.hi, args.windows, args.overlap)
    else:
        scheme = WindowScheme.spaced(args.lo, args.hi, args.windows, args.overlap)
    chain = ChainConfig(chain_length=args.chain_length, burn_in=args.burn_in,
                        proposal_scale=args.proposal_scale, master_seed=cfg.seed)
    result = run_glue(target, scheme, chain)
    out = cfg.out or "glue.csv"
    write_csv(result, out)
    diag = args.diagnostics or str(Path(out).with_suffix(".json"))
    Path(diag).write_text(diagnostics_json(result) + "\n")
    print(f"wrote {out} and {diag}")
    return EXIT_OK


def cmd_lindley(cfg: RunConfig, args) -> int:
    if not args.sigma > 0:
        raise UsageError("--sigma must be positive")
    curve = test_statistic_curve(_grid_spec(args.grid), args.sigma)
    rows = [tuple(float(v) for v in r) for r in curve.rows()]
    _emit(_csv(["x_over_sigma", "p_value", "posterior_flat", "posterior_scaled"], rows), cfg.out)
    return EXIT_OK


_PRIORS = {
    "flat": lambda th: np.zeros(np.shape(th)),
    "inverse": lambda th: -np.log(th),
}


def _prior(spec: str):
    if spec in _PRIORS:
        return _PRIORS[spec]
    if spec.startswith("power:"):
        a = _float(spec.split(":", 1)[1])
        return lambda th: a * np.log(th)
    raise UsageError(f"unknown prior {spec!r}; use flat, inverse or power:<a>")


def cmd_marginalization(cfg: RunConfig, args) -> int:
    lp = _prior(args.prior)
    grid = None if args.theta_grid is None else _grid_spec(args.theta_grid)
    rep = marginalization_pair(lp, args.z, grid, tol=1e-6)
    d = rep.to_dict()
    d.update({"z": args.z, "prior": args.prior,
              "profile_vs_minus_log_theta_plus_z": float(np.ptp(rep.log_ratio + np.log(rep.theta_grid + args.z)))})
    # route A against direct quadrature over phi (at x = 1)
    sub = rep.theta_grid[:: max(1, rep.theta_grid.size // 9)]
    quad = route_a_by_quadrature(lp, 1.0, args.z, sub)
    d["route_a_quadrature_spread"] = float(np.ptp(quad - rep.route_a.logpdf(sub)))
    _emit(_json(d), cfg.out)
    return EXIT_OK


def _verdict_word(v: float | None) -> str:
    return {0.0: "reject", 1.0: "accept", 0.5: "indifferent"}.get(v, "unclassified")


def cmd_improper_test(cfg: RunConfig, args) -> int:
    sched = _schedule(args.schedule) if args.schedule else None
    lim = focus_test_limit(args.x, args.m, sched, band=args.band)
    report = {"x": args.x, "m": args.m, "schedule": list(lim.schedule),
              "probabilities": list(lim.probabilities), "extrapolated": lim.extrapolated,
              "verdict": _verdict_word(lim.verdict), "raw_verdict": _verdict_word(lim.raw_verdict)}
    if args.n is not None:
        report["window_probability"] = {"n": args.n, "value": improper_test_probability(
            args.x, args.m, args.n, max(cfg.tol, 1e-8))}
    if cfg.out:
        Path(cfg.out).write_text(_csv(["n", "probability"],
                                      zip(lim.schedule, map(float, lim.probabilities))))
    sys.stdout.write(_json(report))
    return EXIT_OK


def cmd_models(cfg: RunConfig, args) -> int:
    rows = [f"{name:18s} {e.data_kind:6s} {e.help}  params={e.params}" for name, e in MODELS.items()]
    _emit("\n".join(rows) + "\n", cfg.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=_seed, default=0, help="64-bit master seed")
    g.add_argument("--tol", type=_float, default=DEFAULT_TOL,
                   help="relative quadrature tolerance")
    g.add_argument("--out", default=None, help="output path (default: stdout, glue: glue.csv)")
    g.add_argument("--config", default=None,
                   help="flat key=value file; keys mirror long flags, flags override it")
    return p


def _model_args(p: argparse.ArgumentParser, choices) -> None:
    p.add_argument("--model", required=True, choices=choices)
    p.add_argument("--x", required=True, help="observation: count, real, or x,z for pairs")
    p.add_argument("--t", type=_float, default=None, help="Poisson exposure (default 1)")
    p.add_argument("--n", type=int, default=None, help="binomial trials (default 10)")


class _Formatter(argparse.ArgumentDefaultsHelpFormatter):
    # None defaults are described in the help text itself
    def _get_help_string(self, action):
        if action.default is None:
            return action.help
        return super()._get_help_string(action)


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="renyi", description=__doc__.split("\n")[0],
                                     formatter_class=_Formatter)
    sub = parser.add_subparsers(dest="subcommand", required=True)
    fmt = _Formatter

    p = sub.add_parser("posterior", parents=[common], formatter_class=fmt,
                       help="classify a zoo posterior and report masses (JSON)")
    _model_args(p, sorted(MODELS))
    p.add_argument("--window", default=None, help="lo,hi (2-D: xlo,xhi;ylo,yhi; write --window=-5,5 for a negative start); mass of the kernel on it")
    p.add_argument("--table", type=int, default=0, help="points of a window-normalized density table")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("glue", parents=[common], formatter_class=fmt,
                       help="windowed sampling, KDE, alignment and gluing (CSV + JSON)")
    _model_args(p, sorted(k for k, e in MODELS.items() if e.data_kind == "count"))
    p.add_argument("--lo", type=_float, default=1e-3, help="lower end of the windowed range")
    p.add_argument("--hi", type=_float, default=10.0, help="upper end of the windowed range")
    p.add_argument("--windows", type=int, default=6, help="number of windows")
    p.add_argument("--overlap", type=_float, default=0.5, help="fractional overlap of neighbours")
    p.add_argument("--coordinate", choices=("log", "raw"), default="log", help="sampler coordinate")
    p.add_argument("--chain-length", type=int, default=200_000, help="steps per window")
    p.add_argument("--burn-in", type=int, default=20_000, help="discarded leading steps")
    p.add_argument("--proposal-scale", type=_float, default=None, help="fixed step size (default: tuned)")
    p.add_argument("--diagnostics", default=None, help="diagnostics JSON path (default: <out>.json)")
    p.set_defaults(func=cmd_glue)

    p = sub.add_parser("lindley", parents=[common], formatter_class=fmt,
                       help="p-value and point-null posteriors against x/sigma (CSV)")
    p.add_argument("--sigma", type=_float, default=1.0, help="sampling standard deviation")
    p.add_argument("--grid", default="0:4:81", help="x/sigma grid, start:stop:num or a comma list")
    p.set_defaults(func=cmd_lindley)

    p = sub.add_parser("marginalization", parents=[common], formatter_class=fmt,
                       help="the two posteriors of theta in the exponential-ratio model (JSON)")
    p.add_argument("--z", type=_float, required=True, help="observed ratio y/x")
    p.add_argument("--prior", default="flat", help="flat, inverse (1/theta) or power:<a> (theta^a)")
    p.add_argument("--theta-grid", default=None, help="theta grid, start:stop:num or comma list")
    p.set_defaults(func=cmd_marginalization)

    p = sub.add_parser("improper-test", parents=[common], formatter_class=fmt,
                       help="P(gamma <= 0 | window) along a window schedule and its limit (JSON)")
    p.add_argument("--x", type=_float, required=True, help="observation")
    p.add_argument("--m", type=_float, default=5.0, help="half-width of the location window")
    p.add_argument("--schedule", default=None, help="increasing n values (default 10,...,1e10)")
    p.add_argument("--band", type=_float, default=0.01, help="classification band around 0, 1/2, 1")
    p.add_argument("--n", type=_float, default=None,
                   help="also report the (gamma, sigma) window probability at this n")
    p.set_defaults(func=cmd_improper_test)

    p = sub.add_parser("models", parents=[common], help="list the model zoo")
    p.set_defaults(func=cmd_models)
    return parser


def read_config(path: str) -> dict[str, str]:
    out = {}
    for k, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{k}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("subcommand", nargs="?")
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices
    if not known.config or known.subcommand not in choices:
        return parser.parse_args(argv)
    sub = choices[known.subcommand]
    actions = {a.dest: a for a in sub._actions if a.option_strings}
    values = read_config(known.config)
    unknown = sorted(set(values) - set(actions) - {"config", "help"})
    if unknown:
        raise UsageError(f"unknown config keys for {known.subcommand}: {unknown}")
    defaults = {}
    for key, text in values.items():
        conv = actions[key].type or str
        try:
            defaults[key] = conv(text)
        except (argparse.ArgumentTypeError, ValueError) as exc:
            raise UsageError(f"config key {key}: {exc}") from None
        if actions[key].choices and defaults[key] not in actions[key].choices:
            raise UsageError(f"config key {key}: {text!r} not in {list(actions[key].choices)}")
        # a required flag may come from the file instead
        actions[key].required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        for a in ("model", "x", "z"):
            if hasattr(args, a) and getattr(args, a) is None:
                raise UsageError(f"--{a} is required")
        cfg = RunConfig(args.subcommand, args.seed, args.tol, args.out)
        return args.func(cfg, args)
    except SystemExit as exc:  # argparse
        return int(exc.code or 0)
    except UndeterminedMassError as exc:
        print(f"renyi: undetermined: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED
    except NotElementaryError as exc:
        print(f"renyi: {exc}", file=sys.stderr)
        return EXIT_UNDETERMINED if exc.mass.is_undetermined else EXIT_USAGE
    except AlignmentError as exc:
        print(f"renyi: alignment failed: {exc}", file=sys.stderr)
        return EXIT_ALIGNMENT
    except (UsageError, ValueError, KeyError, OSError) as exc:
        print(f"renyi: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
