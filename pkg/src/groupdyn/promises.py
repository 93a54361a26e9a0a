"""Promises, impositions, the cooperation triangle and cost accounting.

A promise is an arrow from one autonomous agent to another carrying one or
more bodies. A body is an offer (``+``) or an acceptance (``-``) of a
topic, optionally conditional on another topic (``+X|Y``). Topics are
opaque labels; a frozenset of labels may be used where partial overlap
matters (see :func:`binding_strength`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

__all__ = [
    "Polarity",
    "PromiseBody",
    "Promise",
    "Imposition",
    "PromiseGraph",
    "WorkShareParams",
    "ChannelCapacityParams",
    "offer",
    "accept",
    "binding_strength",
    "conditional_promise",
    "cooperation_triangle",
    "coordination_cost",
    "work_share",
    "agent_work",
    "max_entropy_weight",
    "channel_capacity",
]

Topic = Union[str, frozenset]


class Polarity(str, Enum):
    OFFER = "+"
    ACCEPT = "-"


def _topic_set(topic: Topic) -> frozenset:
    if isinstance(topic, frozenset):
        return topic
    return frozenset([topic])


def _topic_label(topic: Topic) -> str:
    if isinstance(topic, frozenset):
        return "{" + ",".join(sorted(topic)) + "}"
    return str(topic)


def _topic_json(topic: Topic):
    if isinstance(topic, frozenset):
        return sorted(topic)
    return topic


def _topic_from_json(value) -> Topic:
    if isinstance(value, list):
        return frozenset(value)
    return value


@dataclass(frozen=True)
class PromiseBody:
    topic: Topic
    polarity: Polarity
    condition: Topic | None = None

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity(self.polarity))
        if isinstance(self.topic, (set, list, tuple)):
            object.__setattr__(self, "topic", frozenset(self.topic))
        if isinstance(self.topic, frozenset) and not self.topic:
            raise ValueError("topic set must not be empty")

    def __str__(self):
        text = f"{self.polarity.value}{_topic_label(self.topic)}"
        if self.condition is not None:
            text += f"|{_topic_label(self.condition)}"
        return text

    def to_json(self) -> dict:
        return {
            "topic": _topic_json(self.topic),
            "polarity": self.polarity.value,
            "condition": None if self.condition is None else _topic_json(self.condition),
        }


def offer(topic: Topic, condition: Topic | None = None) -> PromiseBody:
    return PromiseBody(topic, Polarity.OFFER, condition)


def accept(topic: Topic, condition: Topic | None = None) -> PromiseBody:
    return PromiseBody(topic, Polarity.ACCEPT, condition)


def _check_pair(source: str, target: str) -> None:
    if source == target:
        raise ValueError(f"agent {source!r} cannot make promises to itself")


@dataclass(frozen=True)
class Promise:
    """Arrow ``source -> target`` carrying one or more bodies.

    Several bodies on one arrow reproduce compound labels such as ``-Y, +X``.
    """

    source: str
    target: str
    bodies: frozenset

    def __post_init__(self):
        _check_pair(self.source, self.target)
        bodies = self.bodies
        if isinstance(bodies, PromiseBody):
            bodies = (bodies,)
        bodies = frozenset(bodies)
        if not bodies:
            raise ValueError("a promise needs at least one body")
        object.__setattr__(self, "bodies", bodies)

    @classmethod
    def of(cls, source: str, target: str, *bodies: PromiseBody) -> "Promise":
        return cls(source, target, frozenset(bodies))

    def label(self) -> str:
        return ", ".join(sorted(str(b) for b in self.bodies))

    def __str__(self):
        return f"{self.source} -[{self.label()}]-> {self.target}"


@dataclass(frozen=True)
class Imposition:
    source: str
    target: str
    body: PromiseBody
    timestamp: int

    def __post_init__(self):
        _check_pair(self.source, self.target)


@dataclass(frozen=True)
class PromiseGraph:
    agents: frozenset
    promises: frozenset
    impositions: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "agents", frozenset(self.agents))
        object.__setattr__(self, "promises", frozenset(self.promises))
        object.__setattr__(self, "impositions", tuple(self.impositions))
        for arrow in (*self.promises, *self.impositions):
            for end in (arrow.source, arrow.target):
                if end not in self.agents:
                    raise ValueError(f"endpoint {end!r} of {arrow} is not a graph agent")
        stamps = [imp.timestamp for imp in self.impositions]
        if stamps != sorted(stamps):
            raise ValueError("impositions must be ordered by timestamp")

    def between(self, source: str, target: str) -> list[Promise]:
        return [p for p in self.promises if p.source == source and p.target == target]

    def impose(self, source: str, target: str, body: PromiseBody) -> "PromiseGraph":
        """Return a new graph with one more imposition event appended."""
        stamp = self.impositions[-1].timestamp + 1 if self.impositions else 0
        imp = Imposition(source, target, body, stamp)
        return PromiseGraph(self.agents, self.promises, (*self.impositions, imp))

    def relabel(self, agents: dict | None = None, topics: dict | None = None) -> "PromiseGraph":
        """Rename agents and/or topics (mappings default to the identity)."""
        agents = agents or {}
        topics = topics or {}

        def a(x):
            return agents.get(x, x)

        def t(x):
            if x is None:
                return None
            if isinstance(x, frozenset):
                return frozenset(topics.get(v, v) for v in x)
            return topics.get(x, x)

        def b(body):
            return PromiseBody(t(body.topic), body.polarity, t(body.condition))

        return PromiseGraph(
            frozenset(a(x) for x in self.agents),
            frozenset(Promise(a(p.source), a(p.target), frozenset(b(x) for x in p.bodies)) for p in self.promises),
            tuple(Imposition(a(i.source), a(i.target), b(i.body), i.timestamp) for i in self.impositions),
        )

    def to_json(self) -> str:
        """Canonical JSON: one promise record per body, grouped by ``promise`` index."""
        records = []
        ordered = sorted(self.promises, key=lambda p: (p.source, p.target, p.label()))
        for index, promise in enumerate(ordered):
            for body in sorted(promise.bodies, key=str):
                records.append({"promise": index, "from": promise.source, "to": promise.target, **body.to_json()})
        doc = {
            "agents": sorted(self.agents),
            "promises": records,
            "impositions": [
                {"timestamp": i.timestamp, "from": i.source, "to": i.target, **i.body.to_json()}
                for i in self.impositions
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PromiseGraph":
        doc = json.loads(text)

        def body(rec):
            cond = rec.get("condition")
            return PromiseBody(
                _topic_from_json(rec["topic"]),
                Polarity(rec["polarity"]),
                None if cond is None else _topic_from_json(cond),
            )

        grouped: dict[int, list] = {}
        for rec in doc["promises"]:
            grouped.setdefault(rec["promise"], []).append(rec)
        promises = set()
        for recs in grouped.values():
            ends = {(r["from"], r["to"]) for r in recs}
            if len(ends) != 1:
                raise ValueError("records of one promise must share endpoints")
            (src, dst), = ends
            promises.add(Promise(src, dst, frozenset(body(r) for r in recs)))
        imps = tuple(
            Imposition(r["from"], r["to"], body(r), r["timestamp"]) for r in doc.get("impositions", [])
        )
        return cls(frozenset(doc["agents"]), frozenset(promises), imps)


def binding_strength(offered: PromiseBody, accepted: PromiseBody) -> float:
    """Fraction of the offered topic that the acceptance covers, ``|b & b'| / |b|``."""
    if offered.polarity is not Polarity.OFFER or accepted.polarity is not Polarity.ACCEPT:
        raise ValueError("binding strength needs an offer (+) and an acceptance (-)")
    b = _topic_set(offered.topic)
    b_prime = _topic_set(accepted.topic)
    return len(b & b_prime) / len(b)


def conditional_promise(giver: str, receiver: str, x: Topic, y: Topic) -> frozenset:
    """Expand the shorthand ``giver -[+X(Y)]-> receiver``.

    Gives the conditional offer ``+X|Y`` and the acceptance ``-Y``.
    """
    _check_pair(giver, receiver)
    return frozenset(
        {
            Promise.of(giver, receiver, offer(x, condition=y)),
            Promise.of(giver, receiver, accept(y)),
        }
    )


def cooperation_triangle(a1: str, a2: str, seed: str, x: Topic = "X", y: Topic = "Y") -> PromiseGraph:
    """Six-promise pattern by which two agents align through a shared seed.

    ``a1`` offers X conditionally on Y and ``a2`` offers Y conditionally on
    X, both to the seed; the agents exchange ``-Y, +X`` and ``+Y, -X``
    directly; the seed accepts each conditional offer.
    """
    if len({a1, a2, seed}) != 3:
        raise ValueError(f"cooperation triangle needs three distinct agents, got {a1!r}, {a2!r}, {seed!r}")
    promises = {
        Promise.of(a1, seed, offer(x, condition=y)),
        Promise.of(a1, a2, accept(y), offer(x)),
        Promise.of(a2, a1, offer(y), accept(x)),
        Promise.of(a2, seed, offer(y, condition=x)),
        Promise.of(seed, a1, accept(x, condition=y)),
        Promise.of(seed, a2, accept(y, condition=x)),
    }
    return PromiseGraph(frozenset({a1, a2, seed}), frozenset(promises))


def coordination_cost(topology: str, n: int) -> int:
    """Number of relationships needed to coordinate ``n`` agents.

    ``hub``: every member tied to a leader, ``n - 1``.
    ``mesh``: every unordered pair, ``n (n - 1) / 2``.
    ``triangle``: the six directed promises of :func:`cooperation_triangle`.
    """
    if n < 2:
        raise ValueError(f"need at least two agents, got {n}")
    if topology == "hub":
        return n - 1
    if topology == "mesh":
        return n * (n - 1) // 2
    if topology == "triangle":
        if n != 3:
            raise ValueError(f"triangle topology needs exactly 3 agents, got {n}")
        return 6
    raise ValueError(f"unknown topology {topology!r}")


@dataclass(frozen=True)
class WorkShareParams:
    w_max: float
    m_ratio: float = 1.0
    v_ratio: float = 1.0
    c0: float = 1.0
    c1: float = 0.0
    c2: float = 1.0

    def __post_init__(self):
        if not self.w_max > 0:
            raise ValueError("w_max must be positive")
        if not self.m_ratio >= 1:
            raise ValueError("m_ratio = m / m_min must be >= 1")
        if not 0 <= self.v_ratio <= 1:
            raise ValueError("v_ratio = v / v_max must lie in [0, 1]")
        if self.c1 != 0:
            raise ValueError("c1 must be 0: a lone agent carries its whole share")
        if not self.c0 > 0 or not self.c2 >= 0:
            raise ValueError("need c0 > 0 and c2 >= 0")

    @property
    def contention(self) -> float:
        """Single contention scale ``C = c2 / c0``."""
        return self.c2 / self.c0


@dataclass(frozen=True)
class ChannelCapacityParams:
    bandwidth_b: float
    contention_cost: float

    def __post_init__(self):
        if not (self.bandwidth_b > 0 and self.contention_cost > 0):
            raise ValueError("bandwidth and contention cost must be positive")


def work_share(n: int, w_max: float) -> float:
    """Saturated per-member work bound ``w_max / n``."""
    if n < 1:
        raise ValueError(f"group size must be >= 1, got {n}")
    if not w_max > 0:
        raise ValueError("w_max must be positive")
    return w_max / n


def agent_work(n: int, p: WorkShareParams, n_beta: float) -> float:
    """Work of one agent in a group of ``n``: ``(c1 + c2 (n - 1)) / (c0 n_beta)``."""
    if n < 1:
        raise ValueError(f"group size must be >= 1, got {n}")
    if not n_beta > 0:
        raise ValueError(f"n_beta must be positive, got {n_beta!r}")
    return (p.c1 + p.c2 * (n - 1)) / (p.c0 * n_beta)


def max_entropy_weight(n: int, contention: float, n_beta: float) -> float:
    """Maximum-entropy weight ``exp(-C (n - 1) / n_beta)`` of a group of ``n``."""
    if n < 1:
        raise ValueError(f"group size must be >= 1, got {n}")
    if not contention >= 0:
        raise ValueError("contention scale C must be non-negative")
    if not n_beta > 0:
        raise ValueError(f"n_beta must be positive, got {n_beta!r}")
    return math.exp(-contention * (n - 1) / n_beta)


def channel_capacity(w_agent: float, p: ChannelCapacityParams) -> float:
    # diagnostic only; nothing downstream consumes it
    if not w_agent >= 0:
        raise ValueError("agent work must be non-negative")
    return p.bandwidth_b * math.log1p(w_agent / p.contention_cost)

