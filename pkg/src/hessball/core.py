"""Grid-sampled radial profiles and coupled-system descriptions.

Everything in this package works on the uniform grid t_j = j/(M-1) over
[0, 1], where t is the radial coordinate on the unit ball.  A system couples
n >= 2 unknowns cyclically: equation i has Hessian degree k_i and a forcing
term f_i(t, v) evaluated on the next unknown v_{i+1} (indices wrap around).
Forcing terms come from the finite family

    f(t, v) = sum_j  c_j * t**p_j * v**gamma_j,   c_j, p_j, gamma_j >= 0,

with the convention 0**0 = 1 so constant terms survive at t = 0 and v = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "GridFunction",
    "NonlinearitySpec",
    "PowerSystemSpec",
    "SolutionBundle",
    "SystemSpec",
    "binomial",
    "eval_nonlinearity",
    "grid_points",
    "sup_norm",
]


def binomial(a: int, b: int) -> int:
    """Exact binomial coefficient a-choose-b in integer arithmetic."""
    if a < 0 or b < 0 or b > a:
        raise ValueError(f"binomial({a}, {b}) is outside the supported range 0 <= b <= a")
    return math.comb(a, b)


@lru_cache(maxsize=64)
def grid_points(M: int) -> np.ndarray:
    """Uniform grid t_j = j/(M-1) on [0, 1], cached and locked read-only."""
    t = np.linspace(0.0, 1.0, M)
    t.flags.writeable = False
    return t


@dataclass(frozen=True)
class GridFunction:
    """Scalar samples on the uniform grid; immutable once constructed."""

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 3:
            raise ValueError("a grid function needs a 1-d array with at least 3 samples")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function samples must be finite")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def grid_size(self) -> int:
        return self.values.size

    @property
    def spacing(self) -> float:
        return 1.0 / (self.values.size - 1)

    @property
    def grid(self) -> np.ndarray:
        return grid_points(self.values.size)

    def __call__(self, index: int) -> float:
        return float(self.values[index])


def sup_norm(v: GridFunction | np.ndarray) -> float:
    """Max of |v| over the grid."""
    vals = v.values if isinstance(v, GridFunction) else np.asarray(v, dtype=float)
    return float(np.max(np.abs(vals)))


@dataclass(frozen=True)
class NonlinearitySpec:
    """Finite sum f(t, v) = sum c * t**p * v**gamma with nonnegative data.

    Terms with c = 0 are kept but never contribute; at least one positive
    coefficient is required so the forcing is not identically zero.
    """

    terms: tuple[tuple[float, float, float], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for term in self.terms:
            if len(term) != 3:
                raise ValueError("each term must be a (c, p, gamma) triple")
            c, p, g = (float(x) for x in term)
            if not all(map(math.isfinite, (c, p, g))) or min(c, p, g) < 0:
                raise ValueError(f"term {term!r} must have finite nonnegative entries")
            cleaned.append((c, p, g))
        if not any(c > 0 for c, _, _ in cleaned):
            raise ValueError("at least one term needs a positive coefficient")
        object.__setattr__(self, "terms", tuple(cleaned))

    @property
    def active_terms(self) -> tuple[tuple[float, float, float], ...]:
        return tuple(term for term in self.terms if term[0] > 0)

    @property
    def vanishes_at_zero(self) -> bool:
        """True iff f(t, 0) = 0 for every t, i.e. all active exponents are positive."""
        return all(g > 0 for _, _, g in self.active_terms)


def eval_nonlinearity(f: NonlinearitySpec, t, v):
    """Evaluate f(t, v) elementwise with the 0**0 = 1 convention.

    Negative v samples are a domain error: the family is only defined on
    v >= 0 and fractional exponents would otherwise produce complex values.
    Scalar inputs give a float back; array inputs broadcast.
    """
    t_arr = np.asarray(t, dtype=float)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise ValueError("eval_nonlinearity requires v >= 0")
    out = np.zeros(np.broadcast_shapes(t_arr.shape, v_arr.shape))
    for c, p, g in f.active_terms:
        out = out + c * np.power(t_arr, p) * np.power(v_arr, g)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class SystemSpec:
    """Coupled system: n equations of degree k_i with forcings f_i on the unit ball in R^N."""

    N: int
    k: tuple[int, ...]
    f: tuple[NonlinearitySpec, ...]

    def __post_init__(self) -> None:
        if self.N < 2:
            raise ValueError("ambient dimension N must be at least 2")
        k = tuple(int(x) for x in self.k)
        if len(k) < 2:
            raise ValueError("a system couples at least two equations")
        if any(ki < 1 or ki > self.N for ki in k):
            raise ValueError(f"each degree must satisfy 1 <= k_i <= N, got {k}")
        f = tuple(self.f)
        if len(f) != len(k):
            raise ValueError("need exactly one forcing per equation")
        if not all(isinstance(fi, NonlinearitySpec) for fi in f):
            raise ValueError("forcings must be NonlinearitySpec instances")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "f", f)

    @property
    def n(self) -> int:
        return len(self.k)


@dataclass(frozen=True)
class PowerSystemSpec:
    """Pure-power system: forcing of equation i is v**gamma_i."""

    N: int
    k: tuple[int, ...]
    gamma: tuple[float, ...]

    def __post_init__(self) -> None:
        k = tuple(int(x) for x in self.k)
        gamma = tuple(float(g) for g in self.gamma)
        if len(gamma) != len(k):
            raise ValueError("need exactly one exponent per equation")
        if any(g <= 0 or not math.isfinite(g) for g in gamma):
            raise ValueError("exponents must be positive and finite")
        # delegate the k/N checks
        SystemSpec(self.N, k, tuple(NonlinearitySpec(((1.0, 0.0, g),)) for g in gamma))
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "gamma", gamma)

    @property
    def n(self) -> int:
        return len(self.k)

    @property
    def homogeneity_ratio(self) -> float:
        """prod(gamma) / prod(k); the composite map scales norms by this power."""
        return float(np.prod(self.gamma) / np.prod(self.k))

    def as_system(self) -> SystemSpec:
        return SystemSpec(
            self.N,
            self.k,
            tuple(NonlinearitySpec(((1.0, 0.0, g),)) for g in self.gamma),
        )


def _as_system(spec: SystemSpec | PowerSystemSpec) -> SystemSpec:
    return spec.as_system() if isinstance(spec, PowerSystemSpec) else spec


@dataclass(frozen=True)
class SolutionBundle:
    """A candidate solution: one nonnegative profile per unknown.

    residual and admissibility_margin are diagnostics filled in by whichever
    routine produced the bundle; verify_solution recomputes them from scratch.
    """

    v: tuple[GridFunction, ...]
    spec: SystemSpec
    residual: float
    admissibility_margin: float

    def __post_init__(self) -> None:
        v = tuple(self.v)
        if len(v) != self.spec.n:
            raise ValueError("bundle needs one profile per equation")
        sizes = {vi.grid_size for vi in v}
        if len(sizes) != 1:
            raise ValueError("all profiles must share one grid")
        for i, vi in enumerate(v):
            if vi.values[-1] != 0.0:
                raise ValueError(f"profile {i + 1} must vanish at t = 1 exactly")
            if np.min(vi.values) < 0:
                raise ValueError(f"profile {i + 1} must be nonnegative")
        object.__setattr__(self, "v", v)

    @property
    def grid_size(self) -> int:
        return self.v[0].grid_size
