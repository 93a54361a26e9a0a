"""Continuous-time birth-death simulation of a single seeded group.

Members join at a constant rate ``lambda0`` (the seed's pull does not depend
on how many have already gathered) and leave at the rate fixed by detailed
balance against the discrete group-size law ``p(n) ~ psi(n)``:

    p(n - 1) * lambda0 = p(n) * mu(n)
    mu(n) = lambda0 * sqrt((n - 2) / (n - 1)) * exp(2 beta / n_t),   n >= 3

Size 2 is a reflecting floor (``psi(1) = 0``), ``n_cap`` a reflecting cap.
This rate pair is one valid realization of the stationary law, not the only
one.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .analytic import GroupScalingParams, continuous_mode, psi

__all__ = [
    "ConfigError",
    "SimConfig",
    "GroupState",
    "EventRecord",
    "EventLog",
    "Histogram",
    "default_cap",
    "join_rate",
    "leave_rate",
    "rate_tables",
    "replica_seed",
    "step",
    "run",
    "run_replica",
    "stationary_reference",
    "total_variation",
]

CHUNK = 1 << 18
JOIN, LEAVE = "join", "leave"


class ConfigError(ValueError):
    pass


def default_cap(params: GroupScalingParams) -> int:
    return int(math.ceil(continuous_mode(params) + 20.0 * math.sqrt(params.n_t / params.beta)))


@dataclass(frozen=True)
class SimConfig:
    params: GroupScalingParams
    join_rate_lambda0: float = 1.0
    n_min: int = 2
    n_cap: int | None = None
    event_budget: int = 100_000
    burn_in: int = 0
    master_seed: int = 0
    replicas: int = 1

    def __post_init__(self):
        if self.n_cap is None:
            object.__setattr__(self, "n_cap", default_cap(self.params))
        if not (math.isfinite(self.join_rate_lambda0) and self.join_rate_lambda0 > 0):
            raise ConfigError(f"join rate must be positive, got {self.join_rate_lambda0!r}")
        if self.n_min != 2:
            raise ConfigError(f"n_min is fixed at 2 (psi(1) = 0), got {self.n_min}")
        if self.n_cap <= self.n_min:
            raise ConfigError(f"n_cap must exceed n_min={self.n_min}, got {self.n_cap}")
        if self.burn_in < 0:
            raise ConfigError(f"burn_in must be >= 0, got {self.burn_in}")
        if self.event_budget <= self.burn_in:
            raise ConfigError(
                f"event_budget ({self.event_budget}) must exceed burn_in ({self.burn_in})"
            )
        if self.replicas < 1:
            raise ConfigError(f"replicas must be >= 1, got {self.replicas}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_cap + 1)

    def to_json(self) -> dict:
        return {
            "beta": self.params.beta,
            "n_t": self.params.n_t,
            "lambda0": self.join_rate_lambda0,
            "n_min": self.n_min,
            "n_cap": self.n_cap,
            "event_budget": self.event_budget,
            "burn_in": self.burn_in,
            "master_seed": self.master_seed,
            "replicas": self.replicas,
        }


def _check_size(n: int, config: SimConfig) -> None:
    if not config.n_min <= n <= config.n_cap:
        raise ConfigError(f"size {n} outside [{config.n_min}, {config.n_cap}]")


def join_rate(n: int, config: SimConfig) -> float:
    _check_size(n, config)
    return config.join_rate_lambda0 if n < config.n_cap else 0.0


def leave_rate(n: int, config: SimConfig) -> float:
    _check_size(n, config)
    if n == config.n_min:
        return 0.0
    beta, n_t = config.params.beta, config.params.n_t
    return config.join_rate_lambda0 * math.sqrt((n - 2) / (n - 1)) * math.exp(2.0 * beta / n_t)


def rate_tables(config: SimConfig) -> tuple[np.ndarray, np.ndarray]:
    """Join and leave rates indexed directly by group size (entries below n_min are 0)."""
    join = np.zeros(config.n_cap + 1)
    leave = np.zeros(config.n_cap + 1)
    for n in range(config.n_min, config.n_cap + 1):
        join[n] = join_rate(n, config)
        leave[n] = leave_rate(n, config)
    return join, leave


def replica_seed(master_seed: int, replica: int) -> np.random.SeedSequence:
    """Seed of one replica: ``SeedSequence(master_seed, spawn_key=(replica,))``.

    Equivalent to the ``replica``-th child of ``SeedSequence(master_seed).spawn``.
    """
    return np.random.SeedSequence(master_seed, spawn_key=(replica,))


@dataclass(frozen=True)
class GroupState:
    size: int
    clock: int = 0


@dataclass(frozen=True)
class EventRecord:
    ordinal: int
    transition: str
    size_before: int
    size_after: int
    dt: float


def step(state: GroupState, config: SimConfig, rng: np.random.Generator) -> tuple[GroupState, EventRecord]:
    """Advance one jump: exponential wait at the total rate, then join or leave."""
    lam = join_rate(state.size, config)
    total = lam + leave_rate(state.size, config)
    if total <= 0.0:
        raise ZeroDivisionError(f"no transition enabled at size {state.size}")
    dt = rng.standard_exponential() / total
    if rng.random() * total < lam:
        kind, after = JOIN, state.size + 1
    else:
        kind, after = LEAVE, state.size - 1
    record = EventRecord(state.clock, kind, state.size, after, dt)
    return GroupState(after, state.clock + 1), record


@dataclass
class EventLog:
    size_before: np.ndarray
    size_after: np.ndarray
    dt: np.ndarray

    def __len__(self):
        return len(self.dt)

    def __getitem__(self, i) -> EventRecord:
        before, after = int(self.size_before[i]), int(self.size_after[i])
        return EventRecord(i, JOIN if after > before else LEAVE, before, after, float(self.dt[i]))

    def records(self):
        for i in range(len(self)):
            yield self[i]

    def write_csv(self, fh) -> None:
        fh.write("ordinal,transition,size_before,size_after,dt\n")
        kinds = np.where(self.size_after > self.size_before, JOIN, LEAVE)
        for i in range(len(self)):
            fh.write(f"{i},{kinds[i]},{self.size_before[i]},{self.size_after[i]},{self.dt[i]!r}\n")


@dataclass
class Histogram:
    """Occupancy weight per group size over a contiguous range of sizes."""

    n_min: int
    weights: np.ndarray
    weighting: str = "time"
    meta: dict = field(default_factory=dict)

    @property
    def sizes(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_min + len(self.weights))

    @property
    def n_max(self) -> int:
        return self.n_min + len(self.weights) - 1

    @property
    def total(self) -> float:
        return math.fsum(self.weights)

    @property
    def counts(self) -> dict[int, float]:
        return {int(n): float(w) for n, w in zip(self.sizes, self.weights)}

    def pmf(self) -> np.ndarray:
        return self.weights / self.total

    @classmethod
    def merge(cls, hists) -> "Histogram":
        """Add histograms bin by bin; exactly independent of their order."""
        hists = list(hists)
        if not hists:
            raise ValueError("nothing to merge")
        lo = min(h.n_min for h in hists)
        hi = max(h.n_max for h in hists)
        kinds = {h.weighting for h in hists}
        if len(kinds) != 1:
            raise ValueError(f"cannot merge histograms weighted by {sorted(kinds)}")
        columns = [[] for _ in range(hi - lo + 1)]
        for h in hists:
            for k, w in enumerate(h.weights.tolist()):
                columns[h.n_min - lo + k].append(w)
        merged = np.array([math.fsum(col) for col in columns])
        return cls(lo, merged, kinds.pop())

    def write_csv(self, fh) -> None:
        fh.write("n,weight\n")
        for n, w in zip(self.sizes.tolist(), self.weights.tolist()):
            fh.write(f"{n},{w!r}\n")

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()

    @classmethod
    def read_csv(cls, fh) -> "Histogram":
        reader = csv.DictReader(fh)
        if reader.fieldnames != ["n", "weight"]:
            raise ValueError(f"expected header n,weight, got {reader.fieldnames}")
        rows = sorted((int(r["n"]), float(r["weight"])) for r in reader)
        if not rows:
            raise ValueError("histogram file has no rows")
        lo, hi = rows[0][0], rows[-1][0]
        weights = np.zeros(hi - lo + 1)
        for n, w in rows:
            weights[n - lo] += w
        return cls(lo, weights)


def run_replica(config: SimConfig, replica: int, log: bool = False, advance=None):
    """Simulate one replica from size ``n_min``; returns ``(Histogram, EventLog | None)``.

    Random draws are taken in chunks (exponentials then uniforms per chunk)
    from a PCG64 stream seeded by :func:`replica_seed`, so the result does
    not depend on which kernel backend runs the loop.
    """
    advance = advance or _backend.advance
    rng = np.random.Generator(np.random.PCG64(replica_seed(config.master_seed, replica)))
    join, leave = rate_tables(config)
    acc = np.zeros(config.n_cap + 1)
    total = config.event_budget
    before = np.empty(total if log else 0, dtype=np.int64)
    dts = np.empty(total if log else 0)
    size = config.n_min
    done = 0
    while done < total:
        k = min(CHUNK, total - done)
        exp_draws = rng.standard_exponential(k)
        unif = rng.random(k)
        skip = max(0, config.burn_in - done)
        lb = before[done:done + k] if log else before
        ld = dts[done:done + k] if log else dts
        size = advance(size, join, leave, exp_draws, unif, skip, acc, lb, ld)
        done += k
    hist = Histogram(config.n_min, acc[config.n_min:].copy())
    events = None
    if log:
        after = np.empty_like(before)
        after[:-1] = before[1:]
        after[-1] = size
        events = EventLog(before, after, dts)
    return hist, events


def run(config: SimConfig, log: bool = False, workers: int = 1, advance=None):
    """Run every replica and merge their time-weighted histograms.

    Returns ``(Histogram, EventLog | None)``; with ``log=True`` the event log
    of replica 0 is returned. ``workers > 1`` runs replicas on threads; the
    merged result is identical either way.
    """
    def one(r):
        return run_replica(config, r, log=log and r == 0, advance=advance)

    if workers > 1 and config.replicas > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.replicas)))
    else:
        results = [one(r) for r in range(config.replicas)]
    hist = Histogram.merge(h for h, _ in results)
    hist.meta.update(config=config.to_json(), backend=_backend.BACKEND if advance is None else "custom")
    return hist, results[0][1]


def stationary_reference(config: SimConfig) -> np.ndarray:
    """Probability mass ``psi(n) / Z`` over ``n_min..n_cap`` (aligned with ``config.sizes``)."""
    values = psi(config.sizes.astype(float), config.params)
    return values / math.fsum(values)


def total_variation(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("mass functions must share support")
    return 0.5 * float(np.abs(p - q).sum())
