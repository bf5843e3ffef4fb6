"""Fixed-point machinery for the cyclic integral operator.

Four solution strategies, all built on the composite map A = A_1 ... A_n:

* damped Picard iteration, which converges to the nontrivial fixed point in
  sublinear regimes and collapses to zero in the critical one;
* normalized power iteration, which extracts the invariant shape phi and the
  factor mu = ||A(phi)|| regardless of scaling behaviour;
* analytic rescaling, which turns (phi, mu) into an exact fixed point for
  homogeneous systems via c = mu^{1/(1-rho)};
* a norm-profile scan, which measures G(r) = ||A(v_r)|| along shape-converged
  profiles of prescribed norm r and brackets the roots of G(r) - r, covering
  regimes where the fixed point repels plain iteration.

The multiplier helpers relate systems with per-equation constant factors to
the factor-free chain: the composite map only sees the single number
prod_j lambda_j^{e_j} (e_1 = 1, e_j = (gamma_1...gamma_{j-1})/(k_2...k_j)),
so a nonzero fixed point exists exactly when that product equals
(1/mu)^{k_1}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .analysis import admissibility_check, classify_growth, cone_check
from .core import (
    GridFunction,
    NonlinearitySpec,
    PowerSystemSpec,
    SolutionBundle,
    SystemSpec,
    _as_system,
    grid_points,
    sup_norm,
)
from .operators import apply_composite
from .verify import ode_residual

__all__ = [
    "EigenResult",
    "IterationReport",
    "IterationStatus",
    "LambdaProductCheck",
    "NormProfile",
    "lambda_product_check",
    "lambda_product_exponents",
    "lambda_scaled_system",
    "lambda_scaling_factors",
    "make_bundle",
    "normalized_power_iteration",
    "norm_profile_scan",
    "picard_solve",
    "rescale_to_solution",
]

COLLAPSE_RELATIVE = 1e-10
DIVERGENCE_NORM = 1e10


class IterationStatus(str, Enum):
    CONVERGED = "converged"
    COLLAPSED_TO_ZERO = "collapsed_to_zero"
    DIVERGED = "diverged"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class IterationReport:
    status: IterationStatus
    iterations: int
    norm_history: tuple[float, ...]
    final_delta: float
    solution: SolutionBundle | None


def make_bundle(spec: SystemSpec | PowerSystemSpec, v1: GridFunction) -> SolutionBundle:
    """Assemble a SolutionBundle by chaining v1 through every equation.

    The stored profiles are the chain outputs themselves (not the raw
    iterate), so each vanishes at t = 1 exactly and satisfies its own
    equation up to quadrature error; the fixed-point error shows up only in
    the last equation's coupling back to profile 1.
    """
    sys_spec = _as_system(spec)
    chain = apply_composite(sys_spec, v1, return_chain=True)
    residual = float(np.max(ode_residual(sys_spec, chain)))
    margin = min(
        admissibility_check(GridFunction(-w.values), sys_spec.k[i], sys_spec.N)
        for i, w in enumerate(chain)
    )
    return SolutionBundle(
        v=chain, spec=sys_spec, residual=residual, admissibility_margin=margin
    )


def _default_damping(spec: SystemSpec | PowerSystemSpec) -> float:
    """Undamped when growth stays below the degrees everywhere, else 0.5."""
    growth = classify_growth(spec)
    return 1.0 if growth.product_beta < growth.product_k else 0.5


def picard_solve(
    spec: SystemSpec | PowerSystemSpec,
    init: GridFunction,
    damping: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> IterationReport:
    """Damped fixed-point iteration v <- (1-d) v + d A(v) from a cone start.

    Stops when the update is below tol relative to 1 + ||v||.  Collapse
    (norm below 1e-10 of the start) is checked before convergence so that a
    geometric decay to zero is reported as collapse, not as convergence to
    the trivial fixed point; divergence trips at norm 1e10.
    """
    sys_spec = _as_system(spec)
    if damping is None:
        damping = _default_damping(sys_spec)
    if not 0 < damping <= 1:
        raise ValueError("damping must lie in (0, 1]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not cone_check(init).in_cone:
        raise ValueError("initial profile must lie in the cone")

    init_norm = sup_norm(init)
    v = np.asarray(init.values, dtype=float)
    history: list[float] = []
    delta = math.inf
    status = IterationStatus.MAX_ITER
    iterations = max_iter
    for it in range(1, max_iter + 1):
        w = apply_composite(sys_spec, GridFunction(v)).values
        new = (1.0 - damping) * v + damping * w
        delta = float(np.max(np.abs(new - v)))
        v = new
        norm = float(np.max(np.abs(v)))
        history.append(norm)
        if norm < COLLAPSE_RELATIVE * init_norm:
            status = IterationStatus.COLLAPSED_TO_ZERO
            iterations = it
            break
        if norm > DIVERGENCE_NORM:
            status = IterationStatus.DIVERGED
            iterations = it
            break
        if delta <= tol * (1.0 + norm):
            status = IterationStatus.CONVERGED
            iterations = it
            break

    solution = None
    if status is IterationStatus.CONVERGED:
        solution = make_bundle(sys_spec, GridFunction(v))
    return IterationReport(
        status=status,
        iterations=iterations,
        norm_history=tuple(history),
        final_delta=delta,
        solution=solution,
    )


@dataclass(frozen=True)
class EigenResult:
    """Invariant shape of the composite map and its scaling factor.

    shape has unit sup norm; mu = ||A(shape)||; lambda0 = 1/mu is the unique
    multiplier for which v = lambda0 A(v) has a nonzero cone solution when
    the map is homogeneous of degree 1.
    """

    shape: GridFunction
    mu: float
    lambda0: float
    shape_delta: float
    iterations: int


def normalized_power_iteration(
    spec: SystemSpec | PowerSystemSpec,
    init: GridFunction,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> EigenResult:
    """Iterate v <- A(v)/||A(v)|| to the invariant shape.

    Normalization strips the scaling degree, so the iteration converges for
    any homogeneity; the returned mu is meaningful as an eigenvalue
    reciprocal only in the degree-1 case.
    """
    if not cone_check(init).in_cone or sup_norm(init) == 0:
        raise ValueError("initial profile must be a nonzero cone element")
    sys_spec = _as_system(spec)
    shape = init.values / sup_norm(init)
    delta = math.inf
    iterations = max_iter
    for it in range(1, max_iter + 1):
        w = apply_composite(sys_spec, GridFunction(shape)).values
        norm = float(np.max(np.abs(w)))
        if norm == 0:
            raise ValueError("composite map annihilated the iterate; system is degenerate")
        new_shape = w / norm
        delta = float(np.max(np.abs(new_shape - shape)))
        shape = new_shape
        if delta <= tol:
            iterations = it
            break
    mu = sup_norm(apply_composite(sys_spec, GridFunction(shape)))
    return EigenResult(
        shape=GridFunction(shape),
        mu=mu,
        lambda0=1.0 / mu,
        shape_delta=delta,
        iterations=iterations,
    )


def rescale_to_solution(
    spec: PowerSystemSpec, eig: EigenResult
) -> SolutionBundle | None:
    """Scale the invariant shape to an exact fixed point; None at ratio 1.

    Homogeneity gives A(c phi) = c^rho mu phi, so c = mu^{1/(1-rho)} makes
    c phi a fixed point in the continuum.  At rho = 1 no scale works unless
    mu = 1 exactly, which is the eigenvalue situation, so None is returned.
    """
    rho = spec.homogeneity_ratio
    if rho == 1.0:
        return None
    c = eig.mu ** (1.0 / (1.0 - rho))
    return make_bundle(spec, GridFunction(c * eig.shape.values))


@dataclass(frozen=True)
class NormProfile:
    """Scan of G(r) = ||A(v_r)|| along shape-converged profiles of norm r.

    sign_changes holds the bracketing radius intervals where G(r) - r
    changes sign; roots the bisection-refined crossing radii; solutions the
    defect-accepted bundle for each root (None where acceptance failed).
    converged marks radii whose inner shape iteration met its tolerance.
    """

    radii: tuple[float, ...]
    values: tuple[float, ...]
    converged: tuple[bool, ...]
    sign_changes: tuple[tuple[float, float], ...]
    roots: tuple[float, ...]
    solutions: tuple[SolutionBundle | None, ...]


def _default_shape(M: int) -> np.ndarray:
    t = grid_points(M)
    return 1.0 - t * t


def _pinned_shape(
    sys_spec: SystemSpec,
    r: float,
    shape: np.ndarray,
    inner_tol: float,
    max_inner: int,
) -> tuple[np.ndarray, float, bool]:
    """Run v <- r A(v)/||A(v)|| to shape convergence; returns (shape, G(r), ok)."""
    ok = False
    for _ in range(max_inner):
        w = apply_composite(sys_spec, GridFunction(r * shape)).values
        norm = float(np.max(np.abs(w)))
        if norm == 0:
            return shape, 0.0, True
        new_shape = w / norm
        delta = float(np.max(np.abs(new_shape - shape)))
        shape = new_shape
        if delta <= inner_tol:
            ok = True
            break
    G = sup_norm(apply_composite(sys_spec, GridFunction(r * shape)))
    return shape, G, ok


def _accept_root(
    sys_spec: SystemSpec,
    v: np.ndarray,
    tol: float,
    max_steps: int,
) -> SolutionBundle | None:
    """Bundle a scan root once its fixed-point defect is below tol.

    Deliberately not picard_solve: a root can be repelling, and its profile
    can sit outside the cone (steeply decreasing forcing bends the tail
    convex), so no damped march and no cone gate.  Plain map steps are taken
    only while they shrink the defect.
    """
    prev_delta = math.inf
    for _ in range(max_steps):
        w = apply_composite(sys_spec, GridFunction(v)).values
        delta = float(np.max(np.abs(w - v)))
        if delta <= tol * (1.0 + float(np.max(np.abs(v)))):
            return make_bundle(sys_spec, GridFunction(v))
        if delta >= prev_delta:
            return None
        v, prev_delta = w, delta
    return None


def norm_profile_scan(
    spec: SystemSpec | PowerSystemSpec,
    r_min: float,
    r_max: float,
    points: int,
    inner_tol: float = 1e-10,
    max_inner: int = 300,
    grid_size: int = 1001,
    refine_bits: int = 60,
) -> NormProfile:
    """Profile the composite map's norm response over log-spaced radii.

    Every root of G(r) - r is a candidate solution norm.  Each detected
    sign-change interval is narrowed by bisection (the shape is warm-started
    across evaluations, so the per-step cost stays low) and the profile at
    the refined radius is accepted as a solution once its fixed-point defect
    is small.
    """
    if not 0 < r_min < r_max:
        raise ValueError("need 0 < r_min < r_max")
    if points < 8:
        raise ValueError("need at least 8 scan points")
    sys_spec = _as_system(spec)

    radii = np.logspace(math.log10(r_min), math.log10(r_max), points)
    values = np.empty(points)
    converged = np.empty(points, dtype=bool)
    shapes: list[np.ndarray] = []
    shape = _default_shape(grid_size)
    for j, r in enumerate(radii):
        shape, G, ok = _pinned_shape(sys_spec, float(r), shape, inner_tol, max_inner)
        values[j] = G
        converged[j] = ok
        shapes.append(shape)

    psi = values - radii
    brackets: list[tuple[float, float]] = []
    bracket_shapes: list[np.ndarray] = []
    for j in range(points - 1):
        if psi[j] == 0.0 and (j == 0 or psi[j - 1] != 0.0):
            brackets.append((float(radii[j]), float(radii[j])))
            bracket_shapes.append(shapes[j])
        elif psi[j] * psi[j + 1] < 0.0:
            brackets.append((float(radii[j]), float(radii[j + 1])))
            bracket_shapes.append(shapes[j])
    if points >= 1 and psi[-1] == 0.0:
        brackets.append((float(radii[-1]), float(radii[-1])))
        bracket_shapes.append(shapes[-1])

    roots: list[float] = []
    solutions: list[SolutionBundle | None] = []
    for (a, b), shape in zip(brackets, bracket_shapes):
        lo, hi = a, b
        shape_lo, psi_lo, _ = _pinned_shape(sys_spec, lo, shape, inner_tol, max_inner)
        psi_lo -= lo
        shape = shape_lo
        for _ in range(refine_bits):
            if hi - lo <= 1e-15 * hi:
                break
            mid = 0.5 * (lo + hi)
            shape, G_mid, _ = _pinned_shape(sys_spec, mid, shape, inner_tol, max_inner)
            psi_mid = G_mid - mid
            if psi_mid == 0.0:
                lo = hi = mid
                break
            if (psi_mid < 0) == (psi_lo < 0):
                lo, psi_lo = mid, psi_mid
            else:
                hi = mid
        root = 0.5 * (lo + hi)
        roots.append(root)
        shape, _, _ = _pinned_shape(sys_spec, root, shape, inner_tol, max_inner)
        solutions.append(_accept_root(sys_spec, root * shape, 1e-8, 50))

    return NormProfile(
        radii=tuple(float(r) for r in radii),
        values=tuple(float(v) for v in values),
        converged=tuple(bool(c) for c in converged),
        sign_changes=tuple(brackets),
        roots=tuple(roots),
        solutions=tuple(solutions),
    )


def lambda_product_exponents(spec: PowerSystemSpec) -> tuple[float, ...]:
    """Exponents e_j collapsing per-equation factors into one product.

    Pulling the factor of equation j out through the operators ahead of it
    multiplies the composite output by lambda_j^{e_j/k_1}; the fixed-point
    condition therefore reads prod_j lambda_j^{e_j} = lambda0^{k_1} with
    e_1 = 1 and e_j = (gamma_1 ... gamma_{j-1}) / (k_2 ... k_j).
    """
    e = [1.0]
    for j in range(1, spec.n):
        e.append(e[-1] * spec.gamma[j - 1] / spec.k[j])
    return tuple(e)


@dataclass(frozen=True)
class LambdaProductCheck:
    """Comparison of the collapsed multiplier product against lambda0^{k_1}."""

    product: float
    target: float
    matches: bool
    exponents: tuple[float, ...]
    composite_factor: float

    def __bool__(self) -> bool:
        return self.matches


def lambda_product_check(
    spec: PowerSystemSpec,
    lam: tuple[float, ...],
    eig: EigenResult,
    rtol: float = 1e-6,
) -> LambdaProductCheck:
    """Check whether per-equation multipliers admit a nonzero fixed point.

    Valid only at homogeneity ratio 1, where scale invariance makes the
    existence question a pure number comparison.
    """
    if not math.isclose(spec.homogeneity_ratio, 1.0, rel_tol=0, abs_tol=1e-12):
        raise ValueError("multiplier product check requires homogeneity ratio 1")
    if len(lam) != spec.n:
        raise ValueError("need one multiplier per equation")
    if any(l <= 0 or not math.isfinite(l) for l in lam):
        raise ValueError("multipliers must be positive and finite")
    e = lambda_product_exponents(spec)
    product = float(np.prod([l**ej for l, ej in zip(lam, e)]))
    target = eig.lambda0 ** spec.k[0]
    matches = bool(abs(product - target) <= rtol * abs(target))
    return LambdaProductCheck(
        product=product,
        target=target,
        matches=matches,
        exponents=e,
        composite_factor=product ** (1.0 / spec.k[0]),
    )


def lambda_scaled_system(
    spec: PowerSystemSpec, lam: tuple[float, ...]
) -> SystemSpec:
    """The same power system with constant factor lambda_j on equation j."""
    if len(lam) != spec.n:
        raise ValueError("need one multiplier per equation")
    if any(l <= 0 or not math.isfinite(l) for l in lam):
        raise ValueError("multipliers must be positive and finite")
    return SystemSpec(
        spec.N,
        spec.k,
        tuple(
            NonlinearitySpec(((float(l), 0.0, g),))
            for l, g in zip(lam, spec.gamma)
        ),
    )


def lambda_scaling_factors(
    spec: PowerSystemSpec, lam: tuple[float, ...]
) -> tuple[float, ...]:
    """Per-unknown scale factors absorbing the multipliers into equation 1.

    Replacing u_j by sigma_j u_j (sigma_1 = 1) turns a solution of the
    multiplied system into one of the system whose only multiplier is the
    collapsed product on equation 1, and dividing maps back.  sigma_j
    multiplies lambda_m (m >= j) by the exponent
    -(gamma_j ... gamma_{m-1})/(k_j ... k_m).
    """
    if len(lam) != spec.n:
        raise ValueError("need one multiplier per equation")
    n = spec.n
    sigma = [1.0] * n
    for j in range(1, n):  # 0-based index of unknown j+1
        value = 1.0
        for m in range(j, n):
            gamma_prod = float(np.prod(spec.gamma[j:m])) if m > j else 1.0
            k_prod = float(np.prod(spec.k[j : m + 1]))
            value *= lam[m] ** (-gamma_prod / k_prod)
        sigma[j] = value
    return tuple(sigma)
