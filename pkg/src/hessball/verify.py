"""End-to-end verification of candidate solutions and grid-convergence studies.

A bundle is checked directly against the differential form of the system:
the discrete k_i-Hessian of -v_i must reproduce f_i(t, v_{i+1}) on interior
grid points, the boundary data must vanish, and each -v_i must be
k_i-admissible.

Two plausible-looking requirements are evaluated and reported but kept out
of the pass gate, because solutions can violate them exactly:

* Full convexity.  When k < N and the forcing vanishes on the boundary,
  every exact solution has C(N-1,k-1) u''(1) (u'(1))^{k-1}
  + C(N-1,k) (u'(1))^k = 0 with u'(1) > 0, hence
  u''(1) = -((N-k)/k) u'(1) < 0: the smallest Hessian eigenvalue is
  strictly negative in a boundary layer.  k = N is the case where
  convexity and admissibility coincide.

* Cone membership (window minimum >= ||v||/4).  The operator image is
  k-concave but plainly concave only when k = N or when f(t, v(t)) is
  nondecreasing along the profile; a steeply decreasing forcing (large
  superlinear states) produces a convex tail whose window minimum drops
  below a quarter of the peak.  Such profiles still solve the system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .analysis import admissibility_check, cone_check
from .core import (
    GridFunction,
    SolutionBundle,
    SystemSpec,
    PowerSystemSpec,
    _as_system,
    binomial,
    eval_nonlinearity,
    grid_points,
    sup_norm,
)
from .operators import radial_hessian

__all__ = [
    "RESIDUAL_BOUND_CONSTANT",
    "ConvergenceReport",
    "VerificationReport",
    "constant_forcing_solution",
    "ode_residual",
    "residual_tolerance",
    "richardson_order",
    "verify_solution",
]

# Residual ceiling constant, calibrated once: the constant-forcing family
# sits near 2/M^2, large-amplitude superlinear solutions near 1.6e3/M^2,
# and the (1-t)^{1/k} boundary layer of fractional-power forcings stays
# inside the remaining headroom for every grid this package targets.
RESIDUAL_BOUND_CONSTANT = 4000.0

ADMISSIBILITY_TOL = 1e-5
CONE_TOL_SCALE = 1e-8
SATURATION_FLOOR = 1e-13


def residual_tolerance(M: int) -> float:
    """Acceptable interior residual at grid size M."""
    return max(1e-6, RESIDUAL_BOUND_CONSTANT / (M * M))


def constant_forcing_solution(N: int, k: int, M: int) -> GridFunction:
    """Exact operator output for unit constant forcing: a scaled 1 - t^2."""
    t = grid_points(M)
    amplitude = (k / (N * binomial(N - 1, k - 1))) ** (1.0 / k)
    return GridFunction(amplitude * (1.0 - t * t) / 2.0)


def ode_residual(
    spec: SystemSpec | PowerSystemSpec, profiles: Sequence[GridFunction]
) -> np.ndarray:
    """Max interior defect of each equation for the given profiles.

    Equation i couples to profile i+1 cyclically.  Interior means indices
    2..M-3: the two points nearest each end are excluded so the one-sided
    stencil closures are judged separately as boundary errors.
    """
    sys_spec = _as_system(spec)
    if len(profiles) != sys_spec.n:
        raise ValueError("need one profile per equation")
    M = profiles[0].grid_size
    if any(p.grid_size != M for p in profiles):
        raise ValueError("profiles must share one grid")
    if M < 7:
        raise ValueError("need at least 7 grid points for an interior residual")
    t = grid_points(M)
    out = np.empty(sys_spec.n)
    for i in range(sys_spec.n):
        v_next = profiles[(i + 1) % sys_spec.n]
        sk = radial_hessian(
            GridFunction(-profiles[i].values), sys_spec.k[i], sys_spec.N
        ).values
        fv = np.asarray(
            eval_nonlinearity(sys_spec.f[i], t, v_next.values), dtype=float
        )
        out[i] = float(np.max(np.abs(sk[2 : M - 2] - fv[2 : M - 2])))
    return out


@dataclass(frozen=True)
class VerificationReport:
    """Every checkable property of a candidate bundle, plus the verdict.

    boundary_errors interleaves (|v_i(1)|, |v_i'(0)|) per equation.
    passed requires residuals, boundary errors, and k_i-admissibility
    margins within tolerance; cone_ok and convex_ok separately summarize
    the cone and full-convexity margins (see module docstring for why
    these are reported rather than gated on).
    """

    max_residual: tuple[float, ...]
    boundary_errors: tuple[float, ...]
    admissibility_margins: tuple[float, ...]
    convexity_margins: tuple[float, ...]
    cone_margins: tuple[float, ...]
    residual_tol: float
    passed: bool
    cone_ok: bool
    convex_ok: bool


def verify_solution(
    bundle: SolutionBundle, tol: float | None = None
) -> VerificationReport:
    """Recompute every diagnostic of a bundle from scratch.

    tol bounds the interior residual and the boundary errors; it defaults
    to the calibrated grid law max(1e-6, 4000/M^2).
    """
    spec = bundle.spec
    M = bundle.grid_size
    if tol is None:
        tol = residual_tolerance(M)
    h = 1.0 / (M - 1)

    residuals = tuple(float(x) for x in ode_residual(spec, bundle.v))

    boundary: list[float] = []
    cone_margins: list[float] = []
    adm_margins: list[float] = []
    convex_margins: list[float] = []
    cone_ok = True
    for i, vi in enumerate(bundle.v):
        vals = vi.values
        boundary.append(abs(float(vals[-1])))
        slope0 = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
        boundary.append(abs(float(slope0)))
        report = cone_check(vi)
        cone_margins.append(report.margin)
        cone_ok = cone_ok and (
            report.nonneg_margin >= -CONE_TOL_SCALE * (1.0 + sup_norm(vi))
            and report.margin >= -CONE_TOL_SCALE * (1.0 + sup_norm(vi))
        )
        u = GridFunction(-vals)
        adm_margins.append(admissibility_check(u, spec.k[i], spec.N))
        convex_margins.append(admissibility_check(u, spec.N, spec.N))

    passed = (
        all(r <= tol for r in residuals)
        and all(b <= tol for b in boundary)
        and all(m >= -ADMISSIBILITY_TOL for m in adm_margins)
    )
    convex_ok = all(m >= -ADMISSIBILITY_TOL for m in convex_margins)

    return VerificationReport(
        max_residual=residuals,
        boundary_errors=tuple(boundary),
        admissibility_margins=tuple(adm_margins),
        convexity_margins=tuple(convex_margins),
        cone_margins=tuple(cone_margins),
        residual_tol=float(tol),
        passed=passed,
        cone_ok=cone_ok,
        convex_ok=convex_ok,
    )


@dataclass(frozen=True)
class ConvergenceReport:
    """Observed order from a grid-refinement study.

    order is the least-squares slope of log(error) against log(spacing);
    NaN when the study saturated at round-off level, in which case the
    operation is exact on the tested family and no order can be observed.
    """

    order: float
    errors: tuple[float, ...]
    spacings: tuple[float, ...]
    saturated: bool


def richardson_order(
    error_fn: Callable[[int], float], Ms: Sequence[int]
) -> ConvergenceReport:
    """Fit the convergence order of error_fn over the given grid sizes."""
    if len(Ms) < 3:
        raise ValueError("need at least 3 grid sizes")
    errors = [abs(float(error_fn(int(M)))) for M in Ms]
    spacings = [1.0 / (int(M) - 1) for M in Ms]
    if max(errors) < SATURATION_FLOOR:
        return ConvergenceReport(
            order=math.nan,
            errors=tuple(errors),
            spacings=tuple(spacings),
            saturated=True,
        )
    safe = [max(e, 1e-300) for e in errors]
    slope = float(np.polyfit(np.log(spacings), np.log(safe), 1)[0])
    return ConvergenceReport(
        order=slope,
        errors=tuple(errors),
        spacings=tuple(spacings),
        saturated=False,
    )
