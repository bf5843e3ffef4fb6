"""Scenario runner: reproducible experiments over the solver toolkit.

Each scenario maps one solvability question to a fixed recipe:

* existence     -- classify growth, then solve by Picard (sublinear) or by
                   norm-profile scan (superlinear) and verify the result;
* multiplicity  -- threshold chains plus a scan expected to bracket two
                   solution norms, both polished and verified;
* uniqueness    -- multi-start agreement, analytic rescaling cross-check,
                   single-bracket scan, and the sublinearity report;
* nonexistence  -- contraction factor mu, its explicit upper bound, Picard
                   collapse from several starts, and a bracket-free scan;
* eigenvalue    -- invariant shape, lambda0 spread over random starts, and
                   multiplier-product checks;
* bounds        -- window-constant and prefactor tables plus spot checks of
                   the lower/upper operator bounds;
* verify        -- re-verification of a solution CSV produced earlier.

Configuration is a single JSON file; all tolerances and ranges ride in it.
Runs are deterministic for a fixed (config, seed): the report is written as
sorted-key JSON lines with no timestamps.  Exit codes: 0 success, 2 bad
config, 3 scenario hypothesis not met, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from .analysis import (
    chain_contraction_bound,
    classify_growth,
    lower_bound_check,
    lower_bound_constant,
    multiplicity_thresholds,
    sublinearity_check,
    upper_bound_check,
    upper_bound_prefactor,
)
from .core import (
    GridFunction,
    NonlinearitySpec,
    PowerSystemSpec,
    SolutionBundle,
    SystemSpec,
    _as_system,
    eval_nonlinearity,
    grid_points,
    sup_norm,
)
from .solver import (
    IterationStatus,
    lambda_product_check,
    make_bundle,
    norm_profile_scan,
    normalized_power_iteration,
    picard_solve,
    rescale_to_solution,
)
from .verify import residual_tolerance, verify_solution

__all__ = ["ConfigError", "ScenarioConfig", "load_config", "main", "run_scenario"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_NUMERICAL = 4

SCENARIOS = (
    "existence",
    "multiplicity",
    "uniqueness",
    "nonexistence",
    "eigenvalue",
    "bounds",
    "verify",
)


class ConfigError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    spec: SystemSpec | PowerSystemSpec
    M: int = 1001
    tol: float = 1e-10
    seed: int = 0
    starts: int = 5
    r_min: float = 1e-3
    r_max: float = 1e3
    points: int = 32
    r0: float | None = None
    R0: float | None = None
    xi: float = 0.5
    damping: float | None = None
    lambdas: tuple[tuple[float, ...], ...] = ()
    solution_csv: str | None = None
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        if self.M < 7:
            raise ConfigError("M must be at least 7")
        if self.tol <= 0:
            raise ConfigError("tol must be positive")
        if self.starts < 1:
            raise ConfigError("starts must be at least 1")


def _build_spec(data: dict) -> SystemSpec | PowerSystemSpec:
    try:
        N = int(data["N"])
        k = tuple(int(x) for x in data["k"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid or missing N/k: {exc}") from exc
    if "gamma" in data and "terms" in data:
        raise ConfigError("give either gamma (power system) or terms, not both")
    try:
        if "gamma" in data:
            return PowerSystemSpec(N, k, tuple(float(g) for g in data["gamma"]))
        if "terms" in data:
            forcings = tuple(
                NonlinearitySpec(tuple(tuple(float(x) for x in term) for term in eq))
                for eq in data["terms"]
            )
            return SystemSpec(N, k, forcings)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid system data: {exc}") from exc
    raise ConfigError("config needs gamma or terms")


def load_config(path: str | Path) -> ScenarioConfig:
    """Parse and validate a JSON scenario configuration."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "scenario" not in data:
        raise ConfigError("config needs a scenario")

    spec = _build_spec(data)
    kwargs = {}
    for key, caster in (
        ("M", int),
        ("tol", float),
        ("seed", int),
        ("starts", int),
        ("r_min", float),
        ("r_max", float),
        ("points", int),
        ("r0", float),
        ("R0", float),
        ("xi", float),
        ("damping", float),
        ("solution_csv", str),
        ("out_dir", str),
    ):
        if key in data and data[key] is not None:
            try:
                kwargs[key] = caster(data[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid value for {key}: {exc}") from exc
    if "lambda" in data and data["lambda"] is not None:
        try:
            kwargs["lambdas"] = tuple(
                tuple(float(x) for x in row) for row in data["lambda"]
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid lambda table: {exc}") from exc
    try:
        return ScenarioConfig(scenario=str(data["scenario"]), spec=spec, **kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, IterationStatus):
        return obj.value
    return obj


class _Run:
    """Accumulates findings and solutions; writes everything at the end."""

    def __init__(self, config: ScenarioConfig, out_dir: Path, quiet: bool):
        self.config = config
        self.out_dir = out_dir
        self.quiet = quiet
        self.records: list[dict] = []
        self.solutions: list[SolutionBundle] = []

    def record(self, kind: str, values: dict, tolerances: dict | None = None,
               passed: bool | None = None) -> None:
        rec = {
            "kind": kind,
            "scenario": self.config.scenario,
            "M": self.config.M,
            "values": _jsonable(values),
            "tolerances": _jsonable(tolerances or {}),
            "pass": passed,
        }
        self.records.append(rec)
        if not self.quiet:
            verdict = "info" if passed is None else ("pass" if passed else "FAIL")
            print(f"{kind}: {verdict}")

    def add_solution(self, bundle: SolutionBundle) -> None:
        self.solutions.append(bundle)

    def flush(self) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        report = self.out_dir / "report.jsonl"
        with report.open("w") as fh:
            for rec in self.records:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")
        for idx, bundle in enumerate(self.solutions, start=1):
            path = self.out_dir / f"solution_{idx}.csv"
            t = grid_points(bundle.grid_size)
            cols = [t] + [v.values for v in bundle.v]
            header = "t," + ",".join(f"v_{i+1}" for i in range(len(bundle.v)))
            np.savetxt(
                path,
                np.column_stack(cols),
                fmt="%.17g",
                delimiter=",",
                header=header,
                comments="",
            )
        if not self.quiet:
            print(f"report: {report}")


def _default_init(M: int, amplitude: float = 1.0) -> GridFunction:
    t = grid_points(M)
    return GridFunction(amplitude * (1.0 - t * t))


def _random_cone_inits(M: int, count: int, seed: int) -> list[GridFunction]:
    """Deterministic cone starts: positive mixtures of 1-t^2 and 1-t."""
    rng = np.random.default_rng(seed)
    t = grid_points(M)
    out = []
    for _ in range(count):
        a, b = rng.uniform(0.2, 2.0, size=2)
        scale = 10.0 ** rng.uniform(-1.0, 1.0)
        out.append(GridFunction(scale * (a * (1.0 - t * t) + b * (1.0 - t))))
    return out


def _rel_sup_distance(x: GridFunction, y: GridFunction) -> float:
    denom = max(sup_norm(x), sup_norm(y), 1e-300)
    return float(np.max(np.abs(x.values - y.values))) / denom


def _growth_record(run: _Run) -> str:
    growth = classify_growth(run.config.spec)
    run.record(
        "growth_classification",
        {
            "condition": growth.condition,
            "alpha": growth.alpha,
            "beta": growth.beta,
            "lower0": growth.lower0,
            "upper0": growth.upper0,
            "lower_inf": growth.lower_inf,
            "upper_inf": growth.upper_inf,
            "product_alpha": growth.product_alpha,
            "product_beta": growth.product_beta,
            "product_k": growth.product_k,
            "vanishing_count": growth.vanishing_count,
            "relabel_vanishing_ok": growth.relabel_vanishing_ok,
        },
    )
    return growth.condition


def _verify_and_store(run: _Run, bundle: SolutionBundle, label: str) -> bool:
    report = verify_solution(bundle)
    run.record(
        f"verification_{label}",
        {
            "max_residual": report.max_residual,
            "boundary_errors": report.boundary_errors,
            "admissibility_margins": report.admissibility_margins,
            "convexity_margins": report.convexity_margins,
            "cone_margins": report.cone_margins,
            "cone_ok": report.cone_ok,
            "convex_ok": report.convex_ok,
        },
        {"residual": report.residual_tol},
        report.passed,
    )
    if report.passed:
        run.add_solution(bundle)
    return report.passed


def _scan(run: _Run, points: int | None = None):
    cfg = run.config
    profile = norm_profile_scan(
        cfg.spec,
        cfg.r_min,
        cfg.r_max,
        points or cfg.points,
        grid_size=cfg.M,
    )
    run.record(
        "norm_profile",
        {
            "radii": profile.radii,
            "values": profile.values,
            "converged": profile.converged,
            "sign_changes": profile.sign_changes,
            "roots": profile.roots,
        },
        {"r_min": cfg.r_min, "r_max": cfg.r_max, "points": points or cfg.points},
    )
    return profile


def _scenario_existence(run: _Run) -> int:
    cfg = run.config
    condition = _growth_record(run)
    if condition == "none":
        run.record("hypothesis", {"reason": "no growth regime matches"}, passed=False)
        return EXIT_HYPOTHESIS

    if condition == "C1":
        report = picard_solve(
            cfg.spec, _default_init(cfg.M), damping=cfg.damping, tol=cfg.tol
        )
        run.record(
            "picard",
            {
                "status": report.status,
                "iterations": report.iterations,
                "final_delta": report.final_delta,
            },
            {"tol": cfg.tol},
            report.status is IterationStatus.CONVERGED,
        )
        if report.solution is None:
            return EXIT_NUMERICAL
        return EXIT_OK if _verify_and_store(run, report.solution, "1") else EXIT_NUMERICAL

    profile = _scan(run)
    verified = 0
    for idx, bundle in enumerate(profile.solutions, start=1):
        if bundle is not None and _verify_and_store(run, bundle, str(idx)):
            verified += 1
    run.record("solutions_found", {"count": verified}, passed=verified >= 1)
    return EXIT_OK if verified >= 1 else EXIT_NUMERICAL


def _scenario_multiplicity(run: _Run) -> int:
    cfg = run.config
    if cfg.r0 is None and cfg.R0 is None:
        raise ConfigError("multiplicity scenario needs r0 or R0")
    _growth_record(run)
    thresholds = multiplicity_thresholds(cfg.spec, r0=cfg.r0, R0=cfg.R0)
    run.record(
        "thresholds",
        {
            "r0": thresholds.r0,
            "R0": thresholds.R0,
            "sup_chain": thresholds.sup_chain,
            "sup_chain_at_R0": thresholds.sup_chain_at_R0,
            "inf_chain": thresholds.inf_chain,
            "r0_condition": thresholds.r0_condition,
            "R0_condition": thresholds.R0_condition,
        },
    )
    satisfied = bool(thresholds.r0_condition) or bool(thresholds.R0_condition)
    if not satisfied:
        run.record("hypothesis", {"reason": "threshold condition not met"}, passed=False)
        return EXIT_HYPOTHESIS

    profile = _scan(run)
    verified = 0
    for idx, bundle in enumerate(profile.solutions, start=1):
        if bundle is not None and _verify_and_store(run, bundle, str(idx)):
            verified += 1
    run.record("solutions_found", {"count": verified}, passed=verified >= 2)
    return EXIT_OK if verified >= 2 else EXIT_NUMERICAL


def _scenario_uniqueness(run: _Run) -> int:
    cfg = run.config
    spec = cfg.spec
    if not isinstance(spec, PowerSystemSpec) or spec.homogeneity_ratio >= 1.0:
        run.record(
            "hypothesis",
            {"reason": "uniqueness needs a power system with ratio below 1"},
            passed=False,
        )
        return EXIT_HYPOTHESIS

    limits = []
    for init in _random_cone_inits(cfg.M, cfg.starts, cfg.seed):
        report = picard_solve(spec, init, damping=cfg.damping, tol=cfg.tol)
        if report.status is not IterationStatus.CONVERGED:
            run.record(
                "picard", {"status": report.status}, {"tol": cfg.tol}, False
            )
            return EXIT_NUMERICAL
        limits.append(report.solution.v[0])
    spread = max(
        (_rel_sup_distance(a, b) for a in limits for b in limits), default=0.0
    )
    run.record(
        "multi_start_agreement",
        {"starts": cfg.starts, "max_rel_distance": spread},
        {"rel": 1e-5},
        spread <= 1e-5,
    )

    eig = normalized_power_iteration(spec, _default_init(cfg.M), tol=cfg.tol)
    rescaled = rescale_to_solution(spec, eig)
    rescale_dist = _rel_sup_distance(rescaled.v[0], limits[0])
    run.record(
        "rescale_agreement",
        {"mu": eig.mu, "scale": sup_norm(rescaled.v[0]), "rel_distance": rescale_dist},
        {"rel": 1e-5},
        rescale_dist <= 1e-5,
    )

    profile = _scan(run)
    single = len(profile.sign_changes) == 1
    run.record(
        "bracket_count", {"count": len(profile.sign_changes)}, {"expected": 1}, single
    )

    sub = sublinearity_check(spec, limits[0], cfg.xi)
    run.record(
        "sublinearity",
        {
            "ratio_min": sub.ratio_min,
            "ratio_max": sub.ratio_max,
            "gain": sub.gain,
            "gain_expected": sub.gain_expected,
            "xi": sub.xi,
            "rho": sub.rho,
        },
        passed=sub.hypothesis_ok and sub.ratio_min > 0 and sub.gain > 0,
    )

    bundle = make_bundle(spec, limits[0])
    ok = _verify_and_store(run, bundle, "1")
    agreed = spread <= 1e-5 and rescale_dist <= 1e-5 and single
    return EXIT_OK if (ok and agreed) else EXIT_NUMERICAL


def _scenario_nonexistence(run: _Run) -> int:
    cfg = run.config
    spec = cfg.spec
    if not isinstance(spec, PowerSystemSpec) or not math.isclose(
        spec.homogeneity_ratio, 1.0, rel_tol=0, abs_tol=1e-12
    ):
        run.record(
            "hypothesis",
            {"reason": "nonexistence needs a power system with ratio exactly 1"},
            passed=False,
        )
        return EXIT_HYPOTHESIS

    eig = normalized_power_iteration(spec, _default_init(cfg.M), tol=cfg.tol)
    bound = chain_contraction_bound(spec)
    contraction_ok = eig.mu < 1.0 and eig.mu <= bound
    run.record(
        "contraction",
        {"mu": eig.mu, "bound": bound, "lambda0": eig.lambda0},
        passed=contraction_ok,
    )

    collapsed = 0
    for init in _random_cone_inits(cfg.M, 3, cfg.seed):
        report = picard_solve(spec, init, damping=cfg.damping, tol=1e-12)
        if report.status is IterationStatus.COLLAPSED_TO_ZERO:
            collapsed += 1
    run.record("collapse", {"collapsed": collapsed, "starts": 3}, passed=collapsed == 3)

    profile = _scan(run)
    empty = len(profile.sign_changes) == 0
    run.record(
        "bracket_count", {"count": len(profile.sign_changes)}, {"expected": 0}, empty
    )
    ok = contraction_ok and collapsed == 3 and empty
    return EXIT_OK if ok else EXIT_NUMERICAL


def _scenario_eigenvalue(run: _Run) -> int:
    cfg = run.config
    spec = cfg.spec
    if not isinstance(spec, PowerSystemSpec) or not math.isclose(
        spec.homogeneity_ratio, 1.0, rel_tol=0, abs_tol=1e-12
    ):
        run.record(
            "hypothesis",
            {"reason": "eigenvalue scenario needs a power system with ratio exactly 1"},
            passed=False,
        )
        return EXIT_HYPOTHESIS

    eig = normalized_power_iteration(spec, _default_init(cfg.M), tol=cfg.tol)
    values = [eig.lambda0]
    for init in _random_cone_inits(cfg.M, cfg.starts, cfg.seed):
        values.append(normalized_power_iteration(spec, init, tol=cfg.tol).lambda0)
    spread = (max(values) - min(values)) / min(values)
    run.record(
        "eigenvalue",
        {
            "lambda0": eig.lambda0,
            "mu": eig.mu,
            "iterations": eig.iterations,
            "spread": spread,
            "starts": cfg.starts + 1,
        },
        {"spread_rel": 1e-6},
        spread <= 1e-6,
    )

    all_ok = spread <= 1e-6
    for lam in cfg.lambdas:
        try:
            check = lambda_product_check(spec, lam, eig)
        except ValueError as exc:
            raise ConfigError(f"bad lambda row {lam}: {exc}") from exc
        run.record(
            "lambda_product",
            {
                "lambda": lam,
                "product": check.product,
                "target": check.target,
                "exponents": check.exponents,
                "composite_factor": check.composite_factor,
            },
            passed=check.matches,
        )

    run.add_solution(make_bundle(spec, eig.shape))
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def _scenario_bounds(run: _Run) -> int:
    cfg = run.config
    sys_spec = _as_system(cfg.spec)
    N = sys_spec.N
    run.record(
        "window_constants",
        {
            "N": N,
            "k": list(range(1, N + 1)),
            "values": [lower_bound_constant(k, N) for k in range(1, N + 1)],
        },
    )
    prefactors = [upper_bound_prefactor(k, N) for k in range(1, N + 1)]
    run.record(
        "prefactors",
        {"N": N, "k": list(range(1, N + 1)), "values": prefactors},
        passed=all(p < 1 for p in prefactors),
    )

    v = _default_init(cfg.M)
    t = grid_points(cfg.M)
    growth = classify_growth(sys_spec)
    all_ok = True
    for i in range(1, sys_spec.n + 1):
        f = sys_spec.f[i - 1]
        fv = np.asarray(eval_nonlinearity(f, t, v.values), dtype=float)

        m = growth.alpha[i - 1]
        window = (t >= 0.25) & (t <= 0.75)
        eta = float(np.min(fv[window] / v.values[window] ** m)) * (1.0 - 1e-12)
        low = lower_bound_check(sys_spec, i, v, eta, m)
        run.record(
            f"lower_bound_eq{i}",
            {"eta": eta, "m": m, "lhs": low.lhs, "rhs": low.rhs,
             "hypothesis_ok": low.hypothesis_ok},
            passed=bool(low) if low.hypothesis_ok else None,
        )

        d = growth.beta[i - 1]
        positive = v.values > 0
        eps = float(np.max(fv[positive] / v.values[positive] ** d)) * (1.0 + 1e-12)
        up = upper_bound_check(sys_spec, i, v, eps, d)
        run.record(
            f"upper_bound_eq{i}",
            {"eps": eps, "d": d, "lhs": up.lhs, "rhs": up.rhs,
             "hypothesis_ok": up.hypothesis_ok},
            passed=bool(up) if up.hypothesis_ok else None,
        )
        if low.hypothesis_ok and not low.bound_holds:
            all_ok = False
        if up.hypothesis_ok and not up.bound_holds:
            all_ok = False
    return EXIT_OK if all_ok else EXIT_NUMERICAL


def _scenario_verify(run: _Run) -> int:
    cfg = run.config
    if cfg.solution_csv is None:
        raise ConfigError("verify scenario needs solution_csv")
    try:
        data = np.loadtxt(cfg.solution_csv, delimiter=",", skiprows=1)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read solution CSV: {exc}") from exc
    sys_spec = _as_system(cfg.spec)
    if data.ndim != 2 or data.shape[1] != sys_spec.n + 1:
        raise ConfigError(
            f"solution CSV needs columns t, v_1..v_{sys_spec.n}"
        )
    t = data[:, 0]
    M = t.size
    if not np.allclose(t, grid_points(M), atol=1e-12):
        raise ConfigError("solution CSV must sample the uniform grid on [0, 1]")

    try:
        profiles = tuple(GridFunction(data[:, j + 1]) for j in range(sys_spec.n))
        bundle = SolutionBundle(
            v=profiles, spec=sys_spec, residual=math.nan, admissibility_margin=math.nan
        )
    except ValueError as exc:
        run.record("bundle_invariants", {"error": str(exc)}, passed=False)
        return EXIT_NUMERICAL
    ok = _verify_and_store(run, bundle, "1")
    return EXIT_OK if ok else EXIT_NUMERICAL


_SCENARIO_RUNNERS = {
    "existence": _scenario_existence,
    "multiplicity": _scenario_multiplicity,
    "uniqueness": _scenario_uniqueness,
    "nonexistence": _scenario_nonexistence,
    "eigenvalue": _scenario_eigenvalue,
    "bounds": _scenario_bounds,
    "verify": _scenario_verify,
}


def run_scenario(
    config: ScenarioConfig, out_dir: str | Path | None = None, quiet: bool = False
) -> int:
    """Execute one scenario; write report.jsonl and solution CSVs; return exit code."""
    target = Path(out_dir or config.out_dir or ".")
    run = _Run(config, target, quiet)
    run.record(
        "run_config",
        {
            "scenario": config.scenario,
            "grid": config.M,
            "seed": config.seed,
            "residual_tolerance": residual_tolerance(config.M),
            "iteration_tolerance": config.tol,
        },
    )
    code = _SCENARIO_RUNNERS[config.scenario](run)
    run.flush()
    return code


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hessball",
        description="Radial coupled Hessian systems: solve, scan, and verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    runp = sub.add_parser("run", help="run a scenario from a JSON config")
    runp.add_argument("config", help="path to the JSON configuration")
    runp.add_argument("--out", default=None, help="output directory")
    runp.add_argument("--grid", type=int, default=None, help="override grid size M")
    runp.add_argument("--quiet", action="store_true", help="suppress progress lines")
    args = parser.parse_args(argv)

    try:
        config = load_config(args.config)
        if args.grid is not None:
            config = dataclasses.replace(config, M=args.grid)
        return run_scenario(config, out_dir=args.out, quiet=args.quiet)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # numerical failures surface here
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
