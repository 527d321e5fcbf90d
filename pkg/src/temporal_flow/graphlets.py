"""Walk-pattern graphlets of snapshots, graphlet profiles and State Entropy."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .data import Position, PossessionType
from .errors import ClassificationError, UndefinedMetricError
from .windowing import Snapshot

__all__ = [
    "GraphletClass",
    "GRAPHLET_ORDER",
    "GraphletProfile",
    "relabel",
    "classify_sequence",
    "classify",
    "build_profile",
    "state_entropy",
    "entropy_bits",
    "individual_profiles",
]


class GraphletClass(str, Enum):
    G1 = "1"
    G12 = "12"
    G121 = "121"
    G123 = "123"
    G1212 = "1212"
    G1213 = "1213"
    G1231 = "1231"
    G1232 = "1232"
    G1234 = "1234"
    OTHER = "other"

    @property
    def code(self) -> int:
        return _CODE[self]


GRAPHLET_ORDER: tuple[GraphletClass, ...] = tuple(GraphletClass)
_CODE = {g: i for i, g in enumerate(GRAPHLET_ORDER)}
_BY_SEQUENCE = {g.value: g for g in GRAPHLET_ORDER if g is not GraphletClass.OTHER}


def relabel(nodes: Sequence[Hashable]) -> str:
    """Rename nodes 1, 2, 3, ... in order of first appearance."""
    labels: dict = {}
    out = []
    for node in nodes:
        if node not in labels:
            labels[node] = len(labels) + 1
        out.append(str(labels[node]))
    return "".join(out)


def classify_sequence(nodes: Sequence[Hashable]) -> GraphletClass:
    """Class of a carrier-then-receivers node sequence."""
    if len(nodes) - 1 >= 4:
        return GraphletClass.OTHER
    return _BY_SEQUENCE[relabel(nodes)]


def classify(snapshot: Snapshot) -> GraphletClass:
    holder = snapshot.carrier_at_start
    seq = [holder]
    for i, p in enumerate(snapshot.passes):
        if p.passer != holder or p.passer == p.receiver:
            raise ClassificationError(
                f"snapshot {snapshot.possession_id}#{snapshot.k}: pass {i} "
                f"({p.passer}->{p.receiver}) breaks the chain from {holder}"
            )
        holder = p.receiver
        seq.append(holder)
    return classify_sequence(seq)


@dataclass(frozen=True)
class GraphletProfile:
    key: tuple
    counts: tuple[int, ...]  # indexed like GRAPHLET_ORDER

    def __post_init__(self) -> None:
        if len(self.counts) != len(GRAPHLET_ORDER):
            raise ValueError("a profile needs one count per graphlet class")

    @property
    def total(self) -> int:
        return int(sum(self.counts))

    def count(self, cls: GraphletClass) -> int:
        return self.counts[cls.code]

    def as_dict(self) -> dict[GraphletClass, int]:
        return dict(zip(GRAPHLET_ORDER, self.counts))

    def frequencies(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=float)
        if c.sum() == 0:
            return np.zeros_like(c)
        return c / c.sum()

    @classmethod
    def from_counter(cls, key: tuple, counter: Mapping[GraphletClass, int]) -> "GraphletProfile":
        return cls(key, tuple(int(counter.get(g, 0)) for g in GRAPHLET_ORDER))


def _sort_keys(keys: Iterable) -> list:
    keys = list(keys)
    try:
        return sorted(keys)
    except TypeError:
        return keys


def build_profile(
    snapshots: Iterable[Snapshot],
    key_fn: Callable[[Snapshot], Hashable],
    classes: Mapping[int, GraphletClass] | None = None,
) -> list[GraphletProfile]:
    """Group snapshots by ``key_fn`` and count graphlet classes per group.

    ``classes`` may carry precomputed classes keyed by ``id(snapshot)``.
    Keys are returned sorted when they are orderable. Non-tuple keys are
    wrapped in a 1-tuple.
    """
    groups: dict = {}
    for snap in snapshots:
        key = key_fn(snap)
        cls = classes[id(snap)] if classes is not None else classify(snap)
        groups.setdefault(key, Counter())[cls] += 1
    out = []
    for key in _sort_keys(groups):
        tkey = key if isinstance(key, tuple) else (key,)
        out.append(GraphletProfile.from_counter(tkey, groups[key]))
    return out


def entropy_bits(counts: Sequence[float] | np.ndarray) -> float:
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        raise UndefinedMetricError("entropy of an empty profile is undefined")
    p = c[c > 0] / total
    h = float(-(p * np.log2(p)).sum())
    return max(h, 0.0)


def state_entropy(profile: GraphletProfile) -> float:
    """Shannon entropy of the profile's class distribution, in bits."""
    return entropy_bits(profile.counts)


def _position_of(snapshot: Snapshot, positions: Mapping[tuple[str, str], Position]):
    team = snapshot.possession.team_id
    return {positions[(team, pid)] for pid in snapshot.nodes}


def individual_profiles(
    snapshots: Sequence[Snapshot],
    position: Position,
    possession_type: PossessionType,
    positions: Mapping[tuple[str, str], Position],
) -> list[GraphletProfile]:
    """Per-shot-clock profiles restricted to windows the position takes part in.

    A position takes part when any of its players is in the window's node set,
    the window-start carrier included. Every shot-clock value that occurs for
    the possession type gets a profile, possibly empty. Profiles are ordered
    by descending shot clock.
    """
    counts: dict[float, Counter] = {}
    for snap in snapshots:
        if snap.possession is None or snap.possession.possession_type is not possession_type:
            continue
        bucket = counts.setdefault(snap.shot_clock_at_start, Counter())
        if position in _position_of(snap, positions):
            bucket[classify(snap)] += 1
    return [
        GraphletProfile.from_counter((possession_type.value, clock, position.value), counts[clock])
        for clock in sorted(counts, reverse=True)
    ]


def max_entropy() -> float:
    return math.log2(len(GRAPHLET_ORDER))
