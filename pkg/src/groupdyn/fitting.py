"""Maximum-likelihood estimation of (beta, n_t) from group-size counts.

Observed sizes are treated as draws from the discrete mass
``p(n) = psi(n) / Z`` on ``2..n_max_cut``. Note that after normalization the
mass is ``p(n) ~ sqrt(n - 1) * exp(-2 (beta / n_t) (n - 1))``: it depends on
the parameters only through ``beta / n_t``. The likelihood is therefore
exactly flat along rays ``beta / n_t = const`` and only that ratio (and
quantities built from it, such as the mode) is identified by data. The fit
still reports a point ``(beta_hat, n_t_hat)``: the grid point nearest the
ridge, refined by Nelder-Mead, together with the ratio and the grid
runner-up.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special

from .analytic import (
    DomainError,
    GroupScalingParams,
    HierarchyLadder,
    default_cut,
    integer_mode,
    ladder,
    log_psi,
    psi,
)

__all__ = [
    "FitError",
    "UnidentifiableError",
    "Observations",
    "FitConfig",
    "FitResult",
    "model_mass",
    "log_likelihood",
    "sample_groups",
    "pearson_chi_square",
    "pool_bins",
    "goodness_of_fit",
    "fit",
]


class FitError(ValueError):
    pass


class UnidentifiableError(FitError):
    pass


@dataclass(frozen=True)
class Observations:
    """Number of observed groups of each size (sizes >= 2)."""

    counts: dict

    def __post_init__(self):
        clean = {}
        for n, c in self.counts.items():
            if int(n) != n or int(c) != c:
                raise FitError(f"sizes and counts must be integers, got {n!r}: {c!r}")
            n, c = int(n), int(c)
            if n < 2:
                raise FitError(f"group sizes must be >= 2, got {n}")
            if c < 0:
                raise FitError(f"counts must be non-negative, got {c} at n={n}")
            if c:
                clean[n] = clean.get(n, 0) + c
        if not clean:
            raise FitError("no groups observed")
        object.__setattr__(self, "counts", dict(sorted(clean.items())))

    @property
    def total_groups(self) -> int:
        return sum(self.counts.values())

    @property
    def sizes(self) -> np.ndarray:
        return np.fromiter(self.counts, dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.fromiter(self.counts.values(), dtype=np.int64)

    @property
    def n_max(self) -> int:
        return max(self.counts)

    def scaled(self, factor: int) -> "Observations":
        return Observations({n: c * factor for n, c in self.counts.items()})

    @classmethod
    def from_sizes(cls, sizes) -> "Observations":
        values, counts = np.unique(np.asarray(sizes, dtype=np.int64), return_counts=True)
        return cls(dict(zip(values.tolist(), counts.tolist())))

    @classmethod
    def from_weights(cls, sizes, weights, total_groups: int) -> "Observations":
        """Turn occupancy weights into ``total_groups`` integer counts.

        Uses largest-remainder rounding so the counts sum exactly to
        ``total_groups``.
        """
        w = np.asarray(weights, dtype=float)
        share = w / w.sum() * total_groups
        base = np.floor(share).astype(np.int64)
        short = total_groups - int(base.sum())
        order = np.argsort(-(share - base), kind="stable")
        base[order[:short]] += 1
        return cls(dict(zip(np.asarray(sizes).tolist(), base.tolist())))

    @classmethod
    def read_csv(cls, fh) -> "Observations":
        """Parse an ``n,count`` file; errors name the first offending line."""
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise FitError("line 1: empty input, expected header n,count")
        if [h.strip() for h in header] != ["n", "count"]:
            raise FitError(f"line 1: expected header n,count, got {','.join(header)}")
        counts: dict[int, int] = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise FitError(f"line {line}: expected 2 columns, got {len(row)}")
            try:
                n, c = int(row[0]), int(row[1])
            except ValueError:
                raise FitError(f"line {line}: non-integer value in {','.join(row)!r}") from None
            if n < 2 or c < 0:
                raise FitError(f"line {line}: need n >= 2 and count >= 0, got {n},{c}")
            counts[n] = counts.get(n, 0) + c
        if not any(counts.values()):
            raise FitError("no groups observed")
        return cls(counts)

    def write_csv(self, fh) -> None:
        fh.write("n,count\n")
        for n, c in self.counts.items():
            fh.write(f"{n},{c}\n")


@dataclass(frozen=True)
class FitConfig:
    beta_range: tuple[float, float] = (0.5, 1.0)
    n_t_range: tuple[float, float] = (2.0, 2000.0)
    grid_points: int = 24
    refine_tolerance: float = 1e-6
    n_max_cut: int | None = None
    method: str = "mle"

    def __post_init__(self):
        b_lo, b_hi = self.beta_range
        t_lo, t_hi = self.n_t_range
        if not 0 < b_lo < b_hi <= 1:
            raise FitError(f"beta_range must satisfy 0 < lo < hi <= 1, got {self.beta_range}")
        if not 0 < t_lo < t_hi:
            raise FitError(f"n_t_range must satisfy 0 < lo < hi, got {self.n_t_range}")
        if self.grid_points < 8:
            raise FitError(f"grid_points must be >= 8, got {self.grid_points}")
        if not 0 < self.refine_tolerance <= 1e-2:
            raise FitError(f"refine_tolerance must lie in (0, 1e-2], got {self.refine_tolerance}")
        if self.method not in ("mle", "lsq"):
            raise FitError(f"method must be 'mle' or 'lsq', got {self.method!r}")

    def to_json(self) -> dict:
        return {
            "beta_range": list(self.beta_range),
            "n_t_range": list(self.n_t_range),
            "grid_points": self.grid_points,
            "refine_tolerance": self.refine_tolerance,
            "n_max_cut": self.n_max_cut,
            "method": self.method,
        }


@dataclass(frozen=True)
class FitResult:
    beta_hat: float
    n_t_hat: float
    log_likelihood: float
    chi_square: tuple | None
    implied_mode: int
    implied_ladder: HierarchyLadder
    runner_up: tuple
    n_max_cut: int
    config: FitConfig = field(repr=False)

    @property
    def params(self) -> GroupScalingParams:
        return GroupScalingParams(self.beta_hat, self.n_t_hat)

    @property
    def ratio_hat(self) -> float:
        """Estimated ``beta / n_t``, the identified combination."""
        return self.beta_hat / self.n_t_hat

    def to_json(self) -> dict:
        stat, dof = self.chi_square if self.chi_square is not None else (None, None)
        return {
            "beta_hat": self.beta_hat,
            "n_t_hat": self.n_t_hat,
            "ratio_hat": self.ratio_hat,
            "log_likelihood": self.log_likelihood,
            "chi_square": stat,
            "dof": dof,
            "implied_mode": self.implied_mode,
            "ladder": [{"scale": lvl.scale, "mode": lvl.mode} for lvl in self.implied_ladder.levels],
            "runner_up": {"beta": self.runner_up[0], "n_t": self.runner_up[1], "log_likelihood": self.runner_up[2]},
            "n_max_cut": self.n_max_cut,
            "config": self.config.to_json(),
        }


# terms with nu beyond this add < 1e-25 relative to Z
_NU_NEGLIGIBLE = 60.0


def _log_mass(params: GroupScalingParams, n_max_cut: int) -> np.ndarray:
    """log p(n) for n = 2..n_max_cut, index 0 <-> n = 2."""
    lp = log_psi(np.arange(2, n_max_cut + 1, dtype=float), params)
    return lp - special.logsumexp(lp)


def _log_normalizer(params: GroupScalingParams, n_max_cut: int) -> float:
    reach = 1.0 + _NU_NEGLIGIBLE * params.n_t / (2.0 * params.beta)
    upper = int(min(n_max_cut, max(3, math.ceil(reach))))
    return float(special.logsumexp(log_psi(np.arange(2, upper + 1, dtype=float), params)))


def model_mass(params: GroupScalingParams, n_max_cut: int | None = None) -> np.ndarray:
    """Discrete mass ``psi(n) / Z`` over ``2..n_max_cut``."""
    if n_max_cut is None:
        n_max_cut = default_cut(params)
    return np.exp(_log_mass(params, n_max_cut))


def log_likelihood(obs: Observations, params: GroupScalingParams, n_max_cut: int | None = None) -> float:
    """``sum_n count(n) * log(psi(n) / Z)`` with ``Z`` summed over ``2..n_max_cut``."""
    if n_max_cut is None:
        n_max_cut = max(default_cut(params), obs.n_max)
    if obs.n_max > n_max_cut:
        raise FitError(f"observed size {obs.n_max} exceeds n_max_cut={n_max_cut}")
    log_p = log_psi(obs.sizes.astype(float), params) - _log_normalizer(params, n_max_cut)
    return float(np.dot(obs.values, log_p))


def sample_groups(params: GroupScalingParams, size: int, rng: np.random.Generator, n_max_cut: int | None = None) -> Observations:
    """Draw ``size`` i.i.d. group sizes from the discrete model mass."""
    if n_max_cut is None:
        n_max_cut = default_cut(params)
    mass = model_mass(params, n_max_cut)
    cdf = np.cumsum(mass)
    cdf /= cdf[-1]
    draws = np.searchsorted(cdf, rng.random(size), side="right") + 2
    return Observations.from_sizes(np.minimum(draws, n_max_cut))


def pearson_chi_square(observed, expected) -> float:
    o = np.asarray(observed, dtype=float)
    e = np.asarray(expected, dtype=float)
    if np.any(e <= 0):
        raise FitError("expected counts must be positive")
    return float(np.sum((o - e) ** 2 / e))


def pool_bins(observed, expected, min_expected: float = 5.0):
    """Merge adjacent bins until every pooled expected count reaches ``min_expected``.

    Bins are swept from small to large sizes; a short remainder at the tail
    is folded into the last closed bin.
    """
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0 or o_acc > 0:
        if not exp_out:
            raise FitError("too few observations to form a single bin with expected count >= 5")
        obs_out[-1] += o_acc
        exp_out[-1] += e_acc
    return np.array(obs_out), np.array(exp_out)


def goodness_of_fit(obs: Observations, params: GroupScalingParams, n_max_cut: int | None = None) -> tuple[float, int]:
    """Pearson chi-square of the counts against ``total * p(n)`` after tail pooling.

    Degrees of freedom are ``pooled_bins - 1 - 2`` (two fitted parameters).
    """
    if n_max_cut is None:
        n_max_cut = max(default_cut(params), obs.n_max)
    if obs.n_max > n_max_cut:
        raise FitError(f"observed size {obs.n_max} exceeds n_max_cut={n_max_cut}")
    observed = np.zeros(n_max_cut - 1)
    observed[obs.sizes - 2] = obs.values
    expected = obs.total_groups * model_mass(params, n_max_cut)
    o, e = pool_bins(observed, expected)
    dof = len(o) - 3
    if dof < 1:
        raise FitError(f"too few observations: {len(o)} pooled bins leave no degrees of freedom")
    return pearson_chi_square(o, e), dof


def _objective(obs: Observations, n_max_cut: int, method: str):
    """Per-group objective; depends on counts only through count / total."""
    freq = obs.values / obs.total_groups
    full = np.zeros(n_max_cut - 1)
    full[obs.sizes - 2] = freq
    sizes = obs.sizes.astype(float)

    def value(beta: float, n_t: float) -> float:
        params = GroupScalingParams(beta, n_t)
        if method == "mle":
            log_p = log_psi(sizes, params) - _log_normalizer(params, n_max_cut)
            return float(np.dot(freq, log_p))
        return -float(np.sum((full - model_mass(params, n_max_cut)) ** 2))

    return value


def fit(obs: Observations, config: FitConfig | None = None) -> FitResult:
    """Grid search over (beta, n_t), then Nelder-Mead refinement of the best point.

    The grid is linear in beta and geometric in n_t. Refinement runs in
    ``(log beta, log n_t)`` inside the configured box and stops once the
    simplex shrinks below ``refine_tolerance`` (a relative change).
    """
    config = config or FitConfig()
    if len(obs.counts) < 2:
        raise UnidentifiableError(
            "all groups have the same size; the distribution cannot be identified from one size"
        )
    b_lo, b_hi = config.beta_range
    t_lo, t_hi = config.n_t_range
    n_max_cut = config.n_max_cut
    if n_max_cut is None:
        n_max_cut = max(default_cut(GroupScalingParams(b_lo, t_hi)), obs.n_max)
    if obs.n_max > n_max_cut:
        raise FitError(f"observed size {obs.n_max} exceeds n_max_cut={n_max_cut}")
    objective = _objective(obs, n_max_cut, config.method)

    betas = np.linspace(b_lo, b_hi, config.grid_points)
    scales = np.geomspace(t_lo, t_hi, config.grid_points)
    grid = np.array([[objective(b, t) for t in scales] for b in betas])
    order = np.argsort(-grid, axis=None, kind="stable")
    i0, j0 = np.unravel_index(order[0], grid.shape)
    i1, j1 = np.unravel_index(order[1], grid.shape)
    b1, t1 = float(betas[i1]), float(scales[j1])
    runner_up = (b1, t1, log_likelihood(obs, GroupScalingParams(b1, t1), n_max_cut))

    bounds = [(math.log(b_lo), math.log(b_hi)), (math.log(t_lo), math.log(t_hi))]

    def negative(x):
        beta = min(math.exp(x[0]), b_hi)
        return -objective(beta, math.exp(x[1]))

    start = np.array([math.log(betas[i0]), math.log(scales[j0])])
    res = optimize.minimize(
        negative,
        start,
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": config.refine_tolerance, "fatol": 1e-14, "maxiter": 4000},
    )
    if -res.fun >= grid[i0, j0]:
        beta_hat, n_t_hat = min(math.exp(res.x[0]), b_hi), math.exp(res.x[1])
    else:
        beta_hat, n_t_hat = float(betas[i0]), float(scales[j0])
    params = GroupScalingParams(beta_hat, n_t_hat)
    ll = log_likelihood(obs, params, n_max_cut)
    try:
        chi = goodness_of_fit(obs, params, n_max_cut)
    except FitError:
        chi = None
    mode = integer_mode(params, 2, n_max_cut)
    try:
        implied = ladder(params, n_t_hat, 4)
    except DomainError:
        # recursion stops growing for small scales at low beta
        implied = ladder(params, n_t_hat, 1)
    return FitResult(
        beta_hat=beta_hat,
        n_t_hat=n_t_hat,
        log_likelihood=ll,
        chi_square=chi,
        implied_mode=mode,
        implied_ladder=implied,
        runner_up=runner_up,
        n_max_cut=n_max_cut,
        config=config,
    )
