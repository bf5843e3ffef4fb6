"""Cone diagnostics, explicit bound constants, growth classification, thresholds.

The fixed-point iteration lives in the cone of nonnegative profiles whose
minimum over the middle window [1/4, 3/4] dominates a quarter of the sup
norm.  This module evaluates cone membership, the explicit constants that
bound the solution operator from below (window integral) and above
(endpoint prefactor), the asymptotic growth classification of a system's
forcing family, the threshold chains that certify two-solution regimes, the
comparison-function sublinearity used for uniqueness, and pointwise
admissibility margins of candidate solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import trapezoid

from .core import (
    GridFunction,
    NonlinearitySpec,
    PowerSystemSpec,
    SystemSpec,
    _as_system,
    binomial,
    eval_nonlinearity,
    grid_points,
    sup_norm,
)
from .operators import apply_composite, apply_operator, hessian_eigenvalues

__all__ = [
    "BoundCheck",
    "ConeReport",
    "GrowthClass",
    "SublinearityReport",
    "ThresholdReport",
    "admissibility_check",
    "chain_contraction_bound",
    "classify_growth",
    "cone_check",
    "lower_bound_check",
    "lower_bound_constant",
    "sublinearity_check",
    "upper_bound_check",
    "upper_bound_prefactor",
]

WINDOW = (0.25, 0.75)
WINDOW_FRACTION = 0.25


@dataclass(frozen=True)
class ConeReport:
    """Cone membership: nonnegative, and window minimum >= ||v||/4."""

    in_cone: bool
    margin: float
    nonneg_margin: float


def _window_slice(t: np.ndarray) -> np.ndarray:
    return (t >= WINDOW[0] - 1e-12) & (t <= WINDOW[1] + 1e-12)


def cone_check(v: GridFunction | np.ndarray, tol: float = 1e-10) -> ConeReport:
    """Evaluate both cone inequalities on the grid.

    margin is min over grid points in [1/4, 3/4] of v minus ||v||/4;
    nonneg_margin is the global minimum of v.  Membership allows round-off
    slack tol on both.
    """
    vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
    t = grid_points(vals.size)
    nonneg_margin = float(np.min(vals))
    window_min = float(np.min(vals[_window_slice(t)]))
    margin = window_min - WINDOW_FRACTION * sup_norm(vals)
    return ConeReport(
        in_cone=(nonneg_margin >= -tol and margin >= -tol),
        margin=margin,
        nonneg_margin=nonneg_margin,
    )


@lru_cache(maxsize=256)
def lower_bound_constant(k: int, N: int, M: int = 4001) -> float:
    """Window constant: integral over [1/4, 3/4] of the operator kernel floor.

    Equals the integral of ((k/tau^{N-k}) * (tau^N - 4^{-N})/N / C(N-1,k-1))^{1/k}
    over tau in [1/4, 3/4].  The integrand leaves 1/4 like (tau - 1/4)^{1/k},
    so the quadrature substitutes tau = 1/4 + sigma^k/2: the transformed
    integrand is smooth in sigma and the composite trapezoid rule recovers
    second-order convergence for every k.
    """
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    C = binomial(N - 1, k - 1)
    s = np.linspace(0.0, 1.0, M)
    tau = 0.25 + 0.5 * s**k
    inner = (tau**N - 0.25**N) / (N * C)
    kernel = (k * inner / tau ** (N - k)) ** (1.0 / k)
    integrand = kernel * 0.5 * k * s ** (k - 1)
    return float(trapezoid(integrand, s))


def upper_bound_prefactor(k: int, N: int) -> float:
    """Endpoint prefactor (1/2)(k/(N*C(N-1,k-1)))^{1/k}; strictly below 1."""
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    return 0.5 * (k / (N * binomial(N - 1, k - 1))) ** (1.0 / k)


@dataclass(frozen=True)
class BoundCheck:
    """Outcome of a hypothesis-guarded inequality check.

    hypothesis_ok records whether the forcing inequality (and cone
    membership where required) held on the grid; bound_holds is None when
    the hypothesis failed, so no claim is made.  Truthiness means the
    hypothesis held and the bound held.
    """

    hypothesis_ok: bool
    bound_holds: bool | None
    lhs: float
    rhs: float

    def __bool__(self) -> bool:
        return self.hypothesis_ok and bool(self.bound_holds)


def lower_bound_check(
    spec: SystemSpec | PowerSystemSpec,
    i: int,
    v: GridFunction,
    eta: float,
    m: float,
    tol: float = 1e-8,
) -> BoundCheck:
    """Window lower bound for equation i's operator output.

    Hypothesis: v lies in the cone and f_i(t, v(t)) >= eta * v(t)^m on grid
    points with t in [1/4, 3/4].  Conclusion tested: the output at t = 1/4
    dominates Gamma_i * eta^{1/k_i} * (||v||/4)^{m/k_i} up to tol, where
    Gamma_i is lower_bound_constant(k_i, N).
    """
    sys_spec = _as_system(spec)
    vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
    t = grid_points(vals.size)
    k_i = sys_spec.k[i - 1]

    inside = _window_slice(t)
    fv = np.asarray(eval_nonlinearity(sys_spec.f[i - 1], t, vals), dtype=float)
    floor = eta * vals**m
    hypothesis_ok = bool(
        cone_check(v).in_cone and np.all(fv[inside] >= floor[inside] - 1e-12)
    )
    if not hypothesis_ok:
        return BoundCheck(False, None, math.nan, math.nan)

    w = apply_operator(sys_spec, i, v)
    lhs = float(np.interp(WINDOW[0], t, w.values))
    gamma_i = lower_bound_constant(k_i, sys_spec.N)
    rhs = gamma_i * eta ** (1.0 / k_i) * (sup_norm(vals) / 4.0) ** (m / k_i)
    return BoundCheck(True, bool(lhs >= rhs - tol), lhs, rhs)


def upper_bound_check(
    spec: SystemSpec | PowerSystemSpec,
    i: int,
    v: GridFunction,
    eps: float,
    d: float,
    tol: float = 1e-8,
) -> BoundCheck:
    """Sup-norm upper bound for equation i's operator output.

    Hypothesis: f_i(t, v(t)) <= eps * v(t)^d on the full grid.  Conclusion
    tested: sup ||output|| < (eps * ||v||^d)^{1/k_i} + tol.  The strict form
    holds with room to spare because the endpoint prefactor is below 1.
    """
    sys_spec = _as_system(spec)
    vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
    t = grid_points(vals.size)
    k_i = sys_spec.k[i - 1]

    fv = np.asarray(eval_nonlinearity(sys_spec.f[i - 1], t, vals), dtype=float)
    cap = eps * vals**d
    hypothesis_ok = bool(np.all(fv <= cap + 1e-12))
    if not hypothesis_ok:
        return BoundCheck(False, None, math.nan, math.nan)

    lhs = sup_norm(apply_operator(sys_spec, i, v))
    rhs = (eps * sup_norm(vals) ** d) ** (1.0 / k_i)
    return BoundCheck(True, bool(lhs < rhs + tol), lhs, rhs)


def chain_contraction_bound(spec: PowerSystemSpec) -> float:
    """Explicit upper bound for ||composite(v)|| / ||v||^rho on unit-norm input.

    Composing the per-equation sup bound ||A_j(w)|| <= P_j ||w||^{gamma_j/k_j}
    through the cycle gives prod_j P_j^{e_j} with e_1 = 1 and
    e_j = (gamma_1...gamma_{j-1})/(k_1...k_{j-1}).  For homogeneity ratio 1
    this number bounds the contraction factor of the composite map and is
    strictly below 1, which is what rules out nonzero fixed points.
    """
    bound = 1.0
    exponent = 1.0
    for j in range(spec.n):
        bound *= upper_bound_prefactor(spec.k[j], spec.N) ** exponent
        exponent *= spec.gamma[j] / spec.k[j]
    return bound


@dataclass(frozen=True)
class GrowthClass:
    """Asymptotic growth data of a system's forcing family.

    alpha/beta are the smallest/largest active exponents per equation; the
    four functionals bound the coefficient of the dominant term uniformly in
    t near v = 0 (lower0/upper0) and near v = infinity (lower_inf/upper_inf).
    condition names the first matching solvability regime:

      C1: all lower0 and upper_inf positive, later forcings vanish at v = 0,
          and both exponent products sit below the degree product;
      C2: all upper0 and lower_inf positive, both products above;
      C3: like C1 at zero plus positive lower_inf, products straddling
          (below at zero, above at infinity) -- the two-solution regime
          when a threshold radius exists;
      C4: all upper0 and upper_inf positive, products straddling the other
          way (cannot occur for this family since alpha_i <= beta_i);
      none: no regime matches (in particular the ratio-1 boundary).

    vanishing_count counts equations whose forcing vanishes at v = 0;
    relabel_vanishing_ok reports that at least n-1 do, in which case a
    cyclic relabeling puts the system in the form C1/C3 expect even when
    equation 1 is not the non-vanishing one (informational only; condition
    itself uses the stated i = 2..n form).
    """

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    lower0: tuple[float, ...]
    upper0: tuple[float, ...]
    lower_inf: tuple[float, ...]
    upper_inf: tuple[float, ...]
    condition: str
    product_alpha: float
    product_beta: float
    product_k: float
    vanishing_count: int
    relabel_vanishing_ok: bool


def _dominant_coefficients(f: NonlinearitySpec, exponent: float) -> tuple[float, float]:
    """(min over t, max over t) of the coefficient of v**exponent in f.

    The coefficient function sum_j c_j t^{p_j} over matching terms is
    nondecreasing on [0,1], so the extrema sit at t = 0 and t = 1.
    """
    at0 = 0.0
    at1 = 0.0
    for c, p, g in f.active_terms:
        if g == exponent:
            at1 += c
            if p == 0:
                at0 += c
    return at0, at1


def classify_growth(spec: SystemSpec | PowerSystemSpec) -> GrowthClass:
    """Classify a system by its forcing growth at v = 0 and v = infinity."""
    sys_spec = _as_system(spec)
    alpha, beta = [], []
    lower0, upper0, lower_inf, upper_inf = [], [], [], []
    vanishing = []
    for f in sys_spec.f:
        exps = [g for _, _, g in f.active_terms]
        a, b = min(exps), max(exps)
        alpha.append(a)
        beta.append(b)
        lo0, hi0 = _dominant_coefficients(f, a)
        loI, hiI = _dominant_coefficients(f, b)
        lower0.append(lo0)
        upper0.append(hi0)
        lower_inf.append(loI)
        upper_inf.append(hiI)
        vanishing.append(f.vanishes_at_zero)

    pa = float(np.prod(alpha))
    pb = float(np.prod(beta))
    pk = float(np.prod(sys_spec.k))
    n = sys_spec.n

    exponents_positive = all(a > 0 for a in alpha)
    tail_vanishes = all(vanishing[1:])
    condition = "none"
    if exponents_positive:
        if (
            all(x > 0 for x in lower0)
            and all(x > 0 for x in upper_inf)
            and tail_vanishes
            and pa < pk
            and pb < pk
        ):
            condition = "C1"
        elif (
            all(x > 0 for x in upper0)
            and all(x > 0 for x in lower_inf)
            and pa > pk
            and pb > pk
        ):
            condition = "C2"
        elif (
            all(x > 0 for x in lower0)
            and all(x > 0 for x in lower_inf)
            and tail_vanishes
            and pa < pk < pb
        ):
            condition = "C3"
        elif (
            all(x > 0 for x in upper0)
            and all(x > 0 for x in upper_inf)
            and pa > pk > pb
        ):
            condition = "C4"

    count = sum(vanishing)
    return GrowthClass(
        alpha=tuple(alpha),
        beta=tuple(beta),
        lower0=tuple(lower0),
        upper0=tuple(upper0),
        lower_inf=tuple(lower_inf),
        upper_inf=tuple(upper_inf),
        condition=condition,
        product_alpha=pa,
        product_beta=pb,
        product_k=pk,
        vanishing_count=count,
        relabel_vanishing_ok=count >= n - 1,
    )


@dataclass(frozen=True)
class ThresholdReport:
    """Descending forcing-bound chains certifying two-solution regimes.

    sup_chain[i-1] bounds f_i from above over [0,1] x [0, next bound^{1/k}],
    anchored at v <= r0/4 in the last equation; the small-radius condition
    holds when r0 exceeds sup_chain[0]^{1/k_1}.  sup_chain_at_R0 is the same
    construction anchored at v <= R0 (entries for equations 2..n), feeding
    inf_chain: inf_chain[i-1] bounds f_i from below over the middle window
    with v between the window floor of the next output and its sup bound.
    The large-radius condition holds when R0 < Gamma_1 * inf_chain[0]^{1/k_1}.
    """

    r0: float | None
    R0: float | None
    sup_chain: tuple[float, ...] | None
    sup_chain_at_R0: tuple[float, ...] | None
    inf_chain: tuple[float, ...] | None
    r0_condition: bool | None
    R0_condition: bool | None


def _box_sup(f: NonlinearitySpec, t_lo: float, t_hi: float, v_hi: float, t_points: int) -> float:
    tgrid = np.linspace(t_lo, t_hi, t_points)
    return float(np.max(eval_nonlinearity(f, tgrid, np.full_like(tgrid, v_hi))))


def _box_inf(f: NonlinearitySpec, t_lo: float, t_hi: float, v_lo: float, t_points: int) -> float:
    tgrid = np.linspace(t_lo, t_hi, t_points)
    return float(np.min(eval_nonlinearity(f, tgrid, np.full_like(tgrid, v_lo))))


def multiplicity_thresholds(
    spec: SystemSpec | PowerSystemSpec,
    r0: float | None = None,
    R0: float | None = None,
    t_points: int = 64,
) -> ThresholdReport:
    """Evaluate the threshold chains for the given anchor radii.

    The forcing family is nondecreasing in v, so box extrema over v sit at
    the corners; the t dependence is scanned on a t_points grid.  Either
    anchor may be omitted; a nonpositive anchor is a domain error.
    """
    sys_spec = _as_system(spec)
    if r0 is None and R0 is None:
        raise ValueError("need at least one of r0, R0")
    for name, val in (("r0", r0), ("R0", R0)):
        if val is not None and (not math.isfinite(val) or val <= 0):
            raise ValueError(f"{name} must be positive and finite")

    n = sys_spec.n
    k = sys_spec.k
    f = sys_spec.f

    sup_chain = None
    r0_condition = None
    if r0 is not None:
        g = [0.0] * n
        g[n - 1] = _box_sup(f[n - 1], 0.0, 1.0, r0 / 4.0, t_points)
        for i in range(n - 2, -1, -1):
            g[i] = _box_sup(f[i], 0.0, 1.0, g[i + 1] ** (1.0 / k[i + 1]), t_points)
        sup_chain = tuple(g)
        r0_condition = bool(r0 > g[0] ** (1.0 / k[0]))

    sup_at_R0 = None
    inf_chain = None
    R0_condition = None
    if R0 is not None:
        gt = [0.0] * n  # index 0 unused; entries for equations 2..n
        gt[n - 1] = _box_sup(f[n - 1], 0.0, 1.0, R0, t_points)
        for i in range(n - 2, 0, -1):
            gt[i] = _box_sup(f[i], 0.0, 1.0, gt[i + 1] ** (1.0 / k[i + 1]), t_points)
        e = [0.0] * n
        e[n - 1] = _box_inf(f[n - 1], *WINDOW, R0 / 4.0, t_points)
        for i in range(n - 2, -1, -1):
            gamma_next = lower_bound_constant(k[i + 1], sys_spec.N)
            v_lo = 0.25 * gamma_next * e[i + 1] ** (1.0 / k[i + 1])
            e[i] = _box_inf(f[i], *WINDOW, v_lo, t_points)
        sup_at_R0 = tuple(gt[1:])
        inf_chain = tuple(e)
        gamma_1 = lower_bound_constant(k[0], sys_spec.N)
        R0_condition = bool(R0 < gamma_1 * e[0] ** (1.0 / k[0]))

    return ThresholdReport(
        r0=r0,
        R0=R0,
        sup_chain=sup_chain,
        sup_chain_at_R0=sup_at_R0,
        inf_chain=inf_chain,
        r0_condition=r0_condition,
        R0_condition=R0_condition,
    )


@dataclass(frozen=True)
class SublinearityReport:
    """Comparison-function sandwich and downscaling gain of the composite map.

    ratio_min/ratio_max bound output/(1-t) away from t = 1, so the output is
    pinched between positive multiples of 1-t.  gain is the measured margin
    by which scaling the input by xi in (0,1) beats linear scaling of the
    output: output(xi v) >= (1 + gain) * xi * output(v); gain_expected is
    xi^{rho-1} - 1 from homogeneity.  hypothesis_ok is False when rho >= 1,
    in which case the uniqueness mechanism does not apply and only the
    sandwich fields are populated.
    """

    hypothesis_ok: bool
    ratio_min: float
    ratio_max: float
    gain: float
    gain_expected: float
    xi: float
    rho: float


def sublinearity_check(
    spec: PowerSystemSpec, v: GridFunction, xi: float
) -> SublinearityReport:
    """Measure the comparison sandwich and the strict downscaling gain."""
    if not 0 < xi < 1:
        raise ValueError("xi must lie in (0, 1)")
    if sup_norm(v) == 0:
        raise ValueError("v must be nonzero")
    rho = spec.homogeneity_ratio

    w = apply_composite(spec, v)
    t = grid_points(w.grid_size)
    ratios = w.values[:-1] / (1.0 - t[:-1])
    ratio_min = float(np.min(ratios))
    ratio_max = float(np.max(ratios))

    scaled = apply_composite(spec, GridFunction(xi * v.values))
    mask = w.values > 0
    gain = float(np.min(scaled.values[mask] / (xi * w.values[mask]))) - 1.0
    gain_expected = xi ** (rho - 1.0) - 1.0

    return SublinearityReport(
        hypothesis_ok=rho < 1.0,
        ratio_min=ratio_min,
        ratio_max=ratio_max,
        gain=gain,
        gain_expected=gain_expected,
        xi=xi,
        rho=rho,
    )


def admissibility_check(u: GridFunction, k: int, N: int) -> float:
    """Minimum elementary-symmetric margin of the Hessian eigenvalues of u.

    With (a, b) = (u'', u'/t) the eigenvalue vector is (a, b, ..., b); the
    l-th symmetric function is C(N-1,l) b^l + C(N-1,l-1) a b^{l-1}.  Returns
    the minimum over the grid and l = 1..k; u is k-admissible when this is
    nonnegative up to round-off.  k = N makes the check full convexity.
    """
    if not 1 <= k <= N:
        raise ValueError(f"need 1 <= k <= N, got k={k}, N={N}")
    a, b = hessian_eigenvalues(u, N)
    margin = math.inf
    for l in range(1, k + 1):
        # math.comb gives C(N-1, N) = 0, which the l = N case needs
        s_l = math.comb(N - 1, l) * b**l + math.comb(N - 1, l - 1) * a * b ** (l - 1)
        margin = min(margin, float(np.min(s_l)))
    return margin
