"""Command-line harness.

Every subcommand builds an :class:`ExperimentConfig` and hands it to
:func:`run`, so ``mplab run --config cfg.json`` and the flag form behave the
same.  Exit codes: 0 on PASS / CONSISTENT (and on VIOLATED with
``--expect violated``), 2 on VIOLATED, 1 on failures, errors and
inconclusive verdicts, 64 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from mplab.errors import MplabError

__all__ = ["ExperimentConfig", "run", "main", "EXIT_OK", "EXIT_FAIL", "EXIT_VIOLATED", "EXIT_USAGE"]

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_VIOLATED, EXIT_USAGE = 0, 1, 2, 64

OPERATIONS = (
    "counterexample", "sc-test", "alpha", "green", "meanvalue", "approx",
    "iterate", "envelope", "experiment", "acceptance",
)


class UsageError(Exception):
    pass


@dataclass
class ExperimentConfig:
    """One run of one operation.  ``params`` holds the numeric knobs of that operation."""

    operation: str
    profile: dict = field(default_factory=lambda: {"profile": "euclidean"})
    params: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = 0
    expect: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
        names = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - names)
        if unknown:
            raise UsageError(f"unknown config fields: {unknown}")
        if "operation" not in data:
            raise UsageError("config needs an 'operation'")
        cfg = cls(**data)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if self.operation not in OPERATIONS:
            raise UsageError(f"unknown operation {self.operation!r}")
        if self.expect not in (None, "violated", "consistent"):
            raise UsageError("expect must be 'violated' or 'consistent'")
        if not isinstance(self.params, dict) or not isinstance(self.profile, dict):
            raise UsageError("profile and params must be objects")


# -- output helpers ------------------------------------------------------------------------


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else repr(x)
    return x


def _dump(payload: dict) -> str:
    return json.dumps(_jsonable({"schema_version": SCHEMA_VERSION, **payload}), sort_keys=True, indent=2)


def _emit(cfg: ExperimentConfig, payload: dict):
    text = _dump(payload)
    if cfg.out and not cfg.out.endswith(".csv"):
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def _manifold(cfg, dim=2):
    from mplab.profiles import ModelManifold, profile_from_spec

    return ModelManifold(int(cfg.params.get("dim", dim)), profile_from_spec(cfg.profile))


# -- operations ---------------------------------------------------------------------------------


def _op_counterexample(cfg):
    from mplab.counterexamples import build_cusp, l1_mass, verify_supersolution

    p = cfg.params
    F = build_cusp(float(p.get("epsilon", cfg.profile.get("epsilon", 1.0))))
    rep = verify_supersolution(F, tmax=float(p.get("tmax", 50.0)), points=int(p.get("points", 10_000)))
    mass = l1_mass(F, tol=float(p.get("tol", 1e-8)))
    status = "PASS" if rep["passed"] else "FAIL"
    _emit(cfg, {"operation": "counterexample", "epsilon": F.epsilon, "t_eps": F.t_eps, "status": status,
                "supersolution": rep, "l1_mass": mass})
    return EXIT_OK if rep["passed"] else EXIT_FAIL


def _op_sc_test(cfg):
    from mplab.completeness import sc_ode_test, volume_oracle

    p = cfg.params
    M = _manifold(cfg)
    v = sc_ode_test(M, lam=float(p.get("lambda", 1.0)), T=float(p.get("horizon", 1e20)))
    payload = {"operation": "sc-test", "profile": cfg.profile, "verdict": v.verdict.value, "witness": v.witness}
    if p.get("volume_oracle", True):
        payload["volume_oracle"] = volume_oracle(M)
    _emit(cfg, payload)
    return EXIT_OK


def _op_alpha(cfg):
    from mplab.drifted import solve_alpha

    p = cfg.params
    M = _manifold(cfg)
    T = float(p.get("horizon", 5.0))
    A = solve_alpha(M, T, c=float(p.get("c", 1.0)))
    t = np.linspace(0.0, T, int(p.get("points", 201)))
    L, q, _ = A.alpha.jet(np.maximum(t, 1e-12 * T))
    with np.errstate(over="ignore"):
        alpha = np.exp(L)
        rows = zip(t, alpha, q * alpha)
    if cfg.out:
        _write_csv(cfg.out, ["t", "alpha", "alpha_prime"], rows)
    _emit(cfg, {"operation": "alpha", "profile": cfg.profile, "horizon": T, "log_alpha_end": float(L[-1]),
                "points": int(t.size)})
    return EXIT_OK


def _space(cfg):
    from mplab.greenmean import DiscreteDisc2D, ExactInterval1D

    p = cfg.params
    if p.get("space", "interval") == "interval":
        return ExactInterval1D(float(p.get("a", 0.0)), float(p.get("b", 1.0)), float(p.get("weight", 1.0)))
    if p["space"] == "disc":
        return DiscreteDisc2D(_manifold(cfg), float(p.get("radius", 1.0)), alpha_scale=float(p.get("alpha_scale", 1 / 16)),
                              nr=int(p.get("nr", 32)), ntheta=int(p.get("ntheta", 32)))
    raise UsageError(f"unknown space {p['space']!r}")


def _function(cfg, S):
    from mplab.acceptance import subharmonic_family_1d, subharmonic_family_2d
    from mplab.greenmean import DiscreteDisc2D

    name = cfg.params.get("function")
    fam = subharmonic_family_2d(S) if isinstance(S, DiscreteDisc2D) else {f.name: f for f in subharmonic_family_1d()}
    if name is None:
        name = next(iter(fam))
    if name not in fam:
        raise UsageError(f"unknown function {name!r}; choose from {sorted(fam)}")
    return name, fam[name]


def _node(S, x):
    """Disc poles are given as node indices; the interval takes coordinates."""
    from mplab.greenmean import DiscreteDisc2D

    return int(x) if isinstance(S, DiscreteDisc2D) else float(x)


def _op_green(cfg):
    from mplab.greenmean import green

    S = _space(cfg)
    x, y = _node(S, cfg.params.get("x", 0.5)), _node(S, cfg.params.get("y", 0.5))
    _emit(cfg, {"operation": "green", "x": x, "y": y, "value": float(np.asarray(green(S, x, y)))})
    return EXIT_OK


def _op_meanvalue(cfg):
    from mplab.greenmean import level_ball, mean_value

    S = _space(cfg)
    name, v = _function(cfg, S)
    x, r = _node(S, cfg.params.get("x", 0.5)), float(cfg.params.get("r", 8.0))
    ball = level_ball(S, x, r)
    _emit(cfg, {"operation": "meanvalue", "function": name, "x": x, "r": r, "degenerate": ball.degenerate,
                "value": float(np.asarray(mean_value(S, v, x, r)))})
    return EXIT_OK


def _op_approx(cfg):
    from mplab.greenmean import DiscreteDisc2D, approximation_chain

    S = _space(cfg)
    name, v = _function(cfg, S)
    ks = cfg.params.get("k", [1, 2, 4, 8, 16])
    ks = [int(k) for k in (ks if isinstance(ks, list) else [ks])]
    ch = approximation_chain(S, v, ks)
    disc = isinstance(S, DiscreteDisc2D)
    if cfg.out:
        rows = []
        for k, vk in zip(ks, ch["values"]):
            xs = S.poles if disc else vk.points
            base = v[xs] if disc else np.asarray(v.eval(xs))
            for xi, b, val in zip(xs, base, vk.values):
                rows.append([int(xi) if disc else float(xi), k, float(b), float(val), bool(val <= ch["esup"] + 1e-9)])
        _write_csv(cfg.out, ["x", "k", "v", "v_k", "sup_bound_ok"], rows)
    payload = {k: ch[k] for k in ("ks", "l1_errors", "ordering", "l1_strictly_decreasing", "sup_bound", "esup", "passed")}
    _emit(cfg, {"operation": "approx", "function": name, **payload})
    return EXIT_OK if ch["passed"] else EXIT_FAIL


def _op_iterate(cfg):
    from mplab.scheme import DirichletOperator, monotone_iteration, refinement_order

    p = cfg.params
    tol = float(p.get("tol", 1e-10))
    cells = int(p.get("cells", 64))
    if p.get("case", "interval") == "interval":
        Op = DirichletOperator.interval(0.0, 1.0, cells)
        u1, u2 = -np.ones_like(Op.t), Op.t.copy()
    else:
        Op = DirichletOperator.radial(_manifold(cfg), float(p.get("radius", 1.0)), cells)
        u1, u2 = -np.ones_like(Op.t), np.full_like(Op.t, 2.0)
    res = monotone_iteration(Op, u1, u2, tol=tol)
    order = refinement_order(p.get("case", "interval"))
    ok = res.residual <= 10 * tol
    _emit(cfg, {"operation": "iterate", "iterations": res.iterations, "residual": res.residual, "ordered": res.ordered,
                "t": Op.t, "w": res.w, "refinement": order, "status": "PASS" if ok else "FAIL"})
    return EXIT_OK if ok else EXIT_FAIL


def _op_envelope(cfg):
    from mplab.scheme import bounded_envelope

    p = cfg.params
    M = _manifold(cfg)
    env = bounded_envelope(M, float(p.get("u", -1.0)), radii=tuple(p.get("radii", (2.0, 4.0, 8.0, 16.0))),
                           tol=float(p.get("tol", 1e-10)))
    stages = [{k: s[k] for k in ("R", "iterations", "residual", "core_max", "smoothing_bounds_ok", "m_matrix")}
              for s in env["stages"]]
    _emit(cfg, {"operation": "envelope", "profile": cfg.profile, "c": env["c"], "stages": stages, "cauchy": env["cauchy"]})
    return EXIT_OK


def _op_experiment(cfg):
    from mplab.scheme import positivity_experiment

    M = _manifold(cfg)
    rep = positivity_experiment(M, cfg.params.get("mode", "linfty"))
    _emit(cfg, {"operation": "experiment", "profile": cfg.profile, **rep})
    verdict = rep["verdict"]
    if verdict == "VIOLATED":
        return EXIT_OK if cfg.expect == "violated" else EXIT_VIOLATED
    if verdict == "CONSISTENT":
        return EXIT_OK if cfg.expect in (None, "consistent") else EXIT_FAIL
    return EXIT_FAIL


def _op_acceptance(cfg):
    from mplab.acceptance import SUITES, format_report, report_json, run_acceptance

    suite = cfg.params.get("suite", "all")
    if suite not in SUITES:
        raise UsageError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    results = run_acceptance(suite, seed=cfg.seed)
    print(format_report(results))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(report_json(results) + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_FAIL


_DISPATCH = {
    "counterexample": _op_counterexample,
    "sc-test": _op_sc_test,
    "alpha": _op_alpha,
    "green": _op_green,
    "meanvalue": _op_meanvalue,
    "approx": _op_approx,
    "iterate": _op_iterate,
    "envelope": _op_envelope,
    "experiment": _op_experiment,
    "acceptance": _op_acceptance,
}


def run(config) -> int:
    """Validate a config (dict or ExperimentConfig) and execute it; returns the exit code."""
    try:
        cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
        cfg.validate()
        return _DISPATCH[cfg.operation](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MplabError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


# -- argument parsing -------------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _profile_args(p):
    p.add_argument("--profile", default="euclidean", choices=["euclidean", "hyperbolic", "cusp", "superexp"])
    p.add_argument("--epsilon", type=float, help="cusp parameter")
    p.add_argument("--delta", type=float, help="superexp parameter")


def _common(p):
    p.add_argument("--out")
    p.add_argument("--seed", type=int, default=0)


def _space_args(p):
    p.add_argument("--space", default="interval", choices=["interval", "disc"])
    p.add_argument("--weight", type=float, default=1.0, help="constant interval weight")
    p.add_argument("--radius", type=float, default=1.0, help="disc radius")
    p.add_argument("--function")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mplab", description="Positivity preservation and stochastic completeness on model manifolds.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("counterexample", help="verify the cusp supersolution and its L1 mass")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--tmax", type=float, default=50.0)
    p.add_argument("--points", type=int, default=10_000)
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)

    p = sub.add_parser("sc-test", help="radial stochastic completeness test")
    _profile_args(p)
    p.add_argument("--lambda", dest="lam", type=float, default=1.0)
    p.add_argument("--horizon", type=float, default=1e20)
    _common(p)

    p = sub.add_parser("alpha", help="tabulate the positive L-harmonic function")
    _profile_args(p)
    p.add_argument("--horizon", type=float, default=5.0)
    p.add_argument("--points", type=int, default=201)
    _common(p)

    for name in ("green", "meanvalue"):
        p = sub.add_parser(name, help=f"{name} on a Green space")
        _profile_args(p)
        _space_args(p)
        p.add_argument("--x", type=float, default=0.5)
        p.add_argument("--y", type=float, default=0.5)
        p.add_argument("--r", type=float, default=8.0)
        _common(p)

    p = sub.add_parser("approx", help="monotone approximation chain v_k")
    _profile_args(p)
    _space_args(p)
    p.add_argument("--k", type=int, nargs="+", default=[1, 2, 4, 8, 16])
    _common(p)

    p = sub.add_parser("iterate", help="Sattinger monotone iteration")
    _profile_args(p)
    p.add_argument("--case", default="interval", choices=["interval", "radial"])
    p.add_argument("--cells", type=int, default=64)
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)

    p = sub.add_parser("envelope", help="exhaustion envelope of a constant candidate")
    _profile_args(p)
    p.add_argument("--u", type=float, default=-1.0)
    p.add_argument("--radii", type=float, nargs="+", default=[2.0, 4.0, 8.0, 16.0])
    p.add_argument("--tol", type=float, default=1e-10)
    _common(p)

    p = sub.add_parser("experiment", help="positivity preservation experiment")
    _profile_args(p)
    p.add_argument("--mode", default="linfty", choices=["linfty", "l1"])
    p.add_argument("--expect", choices=["violated", "consistent"])
    _common(p)

    p = sub.add_parser("acceptance", help="run the acceptance criteria")
    p.add_argument("suite", nargs="?", default="all")
    _common(p)

    p = sub.add_parser("run", help="run an ExperimentConfig JSON file")
    p.add_argument("--config", required=True)
    return ap


def _config_from_args(a) -> ExperimentConfig:
    profile = None
    if hasattr(a, "profile"):
        profile = {"profile": a.profile}
        if a.profile == "cusp":
            profile["epsilon"] = a.epsilon if a.epsilon is not None else 1.0
        if a.profile == "superexp":
            profile["delta"] = a.delta if a.delta is not None else 1.0
    skip = {"command", "profile", "epsilon", "delta", "out", "seed", "expect"}
    params = {k: v for k, v in vars(a).items() if k not in skip and v is not None}
    if "lam" in params:
        params["lambda"] = params.pop("lam")
    if a.command == "counterexample":
        params["epsilon"] = a.epsilon
    if a.command in ("green", "meanvalue", "approx") and a.space == "interval":
        params.pop("radius", None)
    cfg = ExperimentConfig(operation=a.command, params=params, out=a.out, seed=a.seed,
                           expect=getattr(a, "expect", None))
    if profile is not None:
        cfg.profile = profile
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    if a.command is None:
        ap.print_usage(sys.stderr)
        return EXIT_USAGE
    if a.command == "run":
        try:
            with open(a.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            print(f"usage error: {exc}", file=sys.stderr)
            return EXIT_USAGE
        return run(data)
    return run(_config_from_args(a))


if __name__ == "__main__":
    sys.exit(main())
