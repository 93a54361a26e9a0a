"""Closed-form group-size density, its mode, normalization and the scaling ladder.

The density over a (real) group size ``n > 1`` is

    psi(n) = (4 / sqrt(pi)) * sqrt(nu) * exp(-nu) / n_t,
    nu     = 2 * beta * (n - 1) / n_t,

where ``beta`` is the promise-keeping efficiency and ``n_t`` the contention
scale (the group size with maximal contention cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

__all__ = [
    "GroupScalingParams",
    "ScaledContention",
    "HierarchyLevel",
    "HierarchyLadder",
    "AttentionBand",
    "REFERENCE_BANDS",
    "DomainError",
    "scaled_nu",
    "psi",
    "log_psi",
    "continuous_mode",
    "default_cut",
    "integer_mode",
    "normalization_integral",
    "discrete_normalizer",
    "ladder",
    "throughput_product",
]

PREFACTOR = 4.0 / math.sqrt(math.pi)
LOG_PREFACTOR = math.log(PREFACTOR)


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


@dataclass(frozen=True)
class GroupScalingParams:
    """Efficiency ``beta`` in (0, 1] and contention scale ``n_t`` > 0."""

    beta: float
    n_t: float

    def __post_init__(self):
        beta, n_t = float(self.beta), float(self.n_t)
        if not (math.isfinite(beta) and 0.0 < beta <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {self.beta!r}")
        if not (math.isfinite(n_t) and n_t > 0.0):
            raise DomainError(f"n_t must be positive and finite, got {self.n_t!r}")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "n_t", n_t)

    @property
    def ratio(self) -> float:
        """beta / n_t, the only combination the normalized mass depends on."""
        return self.beta / self.n_t


@dataclass(frozen=True)
class ScaledContention:
    nu: float

    def __post_init__(self):
        if not self.nu >= 0.0:
            raise DomainError(f"nu must be non-negative, got {self.nu!r}")


def _check_sizes(n):
    arr = np.asarray(n, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 1.0):
        raise DomainError("group size must be >= 1")
    return arr


def scaled_nu(n: float, params: GroupScalingParams) -> ScaledContention:
    """Return the scaled contention variable for group size ``n``."""
    n = float(_check_sizes(n))
    return ScaledContention(2.0 * params.beta * (n - 1.0) / params.n_t)


def psi(n, params: GroupScalingParams):
    """Group-size density at ``n`` (scalar or array, every entry >= 1).

    Returns a float for scalar input and an ndarray otherwise.
    """
    arr = _check_sizes(n)
    nu = 2.0 * params.beta * (arr - 1.0) / params.n_t
    out = PREFACTOR * np.sqrt(nu) * np.exp(-nu) / params.n_t
    if out.ndim == 0:
        return float(out)
    return out


def log_psi(n, params: GroupScalingParams):
    """Natural log of :func:`psi`; ``-inf`` at ``n == 1``."""
    arr = _check_sizes(n)
    nu = 2.0 * params.beta * (arr - 1.0) / params.n_t
    with np.errstate(divide="ignore"):
        out = LOG_PREFACTOR + 0.5 * np.log(nu) - nu - math.log(params.n_t)
    if out.ndim == 0:
        return float(out)
    return out


def continuous_mode(params: GroupScalingParams) -> float:
    """Real-valued argmax of psi: ``1 + n_t / (4 beta)``."""
    return 1.0 + params.n_t / (4.0 * params.beta)


def default_cut(params: GroupScalingParams) -> int:
    """Default truncation for integer sums, ``max(10**4, 50 n_t / beta)``.

    At the cut nu >= 100, so the neglected tail mass is far below 1e-10.
    """
    return max(10_000, int(math.ceil(50.0 * params.n_t / params.beta)))


def integer_mode(params: GroupScalingParams, n_min: int = 2, n_max_cut: int | None = None) -> int:
    """Argmax of psi over the integers in ``[n_min, n_max_cut]``.

    psi is unimodal, so only the integers bracketing the continuous mode
    (clipped to the range) can win. Ties go to the smaller group size.
    """
    if n_max_cut is None:
        n_max_cut = max(default_cut(params), n_min + 1)
    if n_min < 2:
        raise DomainError(f"n_min must be >= 2, got {n_min}")
    if n_max_cut <= n_min:
        raise DomainError(f"empty range [{n_min}, {n_max_cut}]")
    mode = continuous_mode(params)
    candidates = sorted({min(max(c, n_min), n_max_cut) for c in (math.floor(mode), math.ceil(mode))})
    # log-space keeps the comparison meaningful where psi underflows
    values = [log_psi(float(c), params) for c in candidates]
    return candidates[values.index(max(values))]


def normalization_integral(params: GroupScalingParams, tol: float = 1e-9) -> float:
    """Integrate psi over ``[1, inf)`` numerically.

    The range is cut at an upper limit ``U`` where the analytic tail mass
    (an upper incomplete gamma function) is below ``tol / 10``; the
    adaptive quadrature on ``[1, U]`` must report an error below ``tol``.
    The closed-form value is ``1 / beta``.
    """
    if not tol > 0.0:
        raise DomainError(f"tolerance must be positive, got {tol!r}")
    beta, n_t = params.beta, params.n_t
    # tail = Q(3/2, nu_U) / beta
    nu_upper = float(special.gammainccinv(1.5, min(beta * tol / 10.0, 0.5)))
    upper = 1.0 + nu_upper * n_t / (2.0 * beta)
    mode = continuous_mode(params)
    breaks = [b for b in (mode, 1.0 + 2.0 * (mode - 1.0)) if 1.0 < b < upper]

    def integrand(x):
        return psi(x, params)

    value, abserr = integrate.quad(
        integrand, 1.0, upper, points=breaks, epsabs=tol / 10.0, epsrel=0.0, limit=500
    )
    if not (math.isfinite(value) and abserr < tol):
        raise ArithmeticError(
            f"quadrature did not converge (estimate {value!r}, error {abserr!r})"
        )
    return value


def discrete_normalizer(params: GroupScalingParams, n_min: int = 2, n_max_cut: int | None = None) -> float:
    """Sum of psi over the integers ``n_min..n_max_cut`` (inclusive)."""
    if n_max_cut is None:
        n_max_cut = default_cut(params)
    if n_min < 2 or n_max_cut < n_min:
        raise DomainError(f"need 2 <= n_min <= n_max_cut, got [{n_min}, {n_max_cut}]")
    sizes = np.arange(n_min, n_max_cut + 1, dtype=float)
    z = math.fsum(psi(sizes, params))
    if not z > 0.0:
        raise ArithmeticError(
            f"normalizer underflowed on [{n_min}, {n_max_cut}]; "
            "shrink the range towards the mode"
        )
    return z


@dataclass(frozen=True)
class HierarchyLevel:
    scale: float
    mode: int


@dataclass(frozen=True)
class HierarchyLadder:
    params: GroupScalingParams
    levels: tuple[HierarchyLevel, ...]

    def __post_init__(self):
        scales = [lvl.scale for lvl in self.levels]
        if any(b <= a for a, b in zip(scales, scales[1:])):
            raise DomainError(f"ladder scales must increase strictly, got {scales}")

    @property
    def scales(self) -> list[float]:
        return [lvl.scale for lvl in self.levels]

    @property
    def modes(self) -> list[int]:
        return [lvl.mode for lvl in self.levels]


def ladder(params: GroupScalingParams, seed_scale: float, levels: int) -> HierarchyLadder:
    """Build the contention-scale hierarchy from ``seed_scale`` upward.

    Each level's mode is the scale of the level below it, which inverts to
    ``scale[k+1] = 4 beta (scale[k] - 1)``. Only ``params.beta`` is used
    for the recursion; the integer mode of each level is evaluated with
    ``n_t`` set to that level's scale.
    """
    if levels < 1:
        raise DomainError(f"levels must be >= 1, got {levels}")
    if not seed_scale > 1.0:
        raise DomainError(f"seed_scale must exceed 1, got {seed_scale!r}")
    scale = float(seed_scale)
    out = []
    for _ in range(levels):
        level_params = GroupScalingParams(params.beta, scale)
        out.append(HierarchyLevel(scale, integer_mode(level_params)))
        scale = 4.0 * params.beta * (scale - 1.0)
    return HierarchyLadder(params, tuple(out))


@dataclass(frozen=True)
class AttentionBand:
    """Brain-wave band paired with the group-size level it is associated with."""

    name: str
    f_low: float
    f_high: float
    f_center: float
    dunbar_level: float

    def __post_init__(self):
        if not (0 < self.f_low <= self.f_center <= self.f_high):
            raise DomainError(f"band {self.name!r}: need 0 < f_low <= f_center <= f_high")
        if not self.dunbar_level > 0:
            raise DomainError(f"band {self.name!r}: dunbar_level must be positive")


REFERENCE_BANDS = (
    AttentionBand("alpha", 5.0, 15.0, 5.0, 150.0),
    AttentionBand("beta", 12.0, 30.0, 25.0, 30.0),
    AttentionBand("gamma-fast", 32.0, 200.0, 150.0, 5.0),
)


def throughput_product(band: AttentionBand) -> float:
    return band.f_center * band.dunbar_level
