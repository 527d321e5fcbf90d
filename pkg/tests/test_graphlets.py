import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temporal_flow.errors import ClassificationError, UndefinedMetricError
from temporal_flow.graphlets import (
    GRAPHLET_ORDER,
    GraphletClass,
    GraphletProfile,
    build_profile,
    classify,
    classify_sequence,
    entropy_bits,
    individual_profiles,
    max_entropy,
    state_entropy,
)
from temporal_flow.data import Position, PossessionType
from temporal_flow.windowing import build_windows

from conftest import POSITIONS_OF, make_possession

NAMED = {"1", "12", "121", "123", "1212", "1213", "1231", "1232", "1234"}


def oracle_class(nodes):
    """Written independently of the package: dict-based canonical string."""
    if len(nodes) - 1 >= 4:
        return "other"
    seen = {}
    out = ""
    for v in nodes:
        if v not in seen:
            seen[v] = str(len(seen) + 1)
        out += seen[v]
    return out


def chains(n_players, max_passes):
    """Every pass chain (no self passes) over ``n_players`` labels."""
    for length in range(max_passes + 1):
        for first in range(n_players):
            for rest in itertools.product(range(n_players), repeat=length):
                seq = (first,) + rest
                if all(a != b for a, b in zip(seq, seq[1:])):
                    yield seq


def test_enumeration_yields_exactly_nine_classes():
    found = {classify_sequence(c).value for c in chains(4, 3)}
    assert found == NAMED
    assert {oracle_class(c) for c in chains(4, 3)} == NAMED


def test_agrees_with_oracle_up_to_five_passes():
    n = 0
    for c in chains(5, 5):
        assert classify_sequence(c).value == oracle_class(c)
        n += 1
    assert n > 5000


@pytest.mark.parametrize(
    "chain, expected",
    [
        (("a",), "1"),
        (("a", "b"), "12"),
        (("a", "b", "a"), "121"),
        (("a", "b", "c", "a"), "1231"),
        (("a", "b", "a", "c"), "1213"),
        (("a", "b", "c", "d", "e"), "other"),
        (("a", "b", "a", "b", "a"), "other"),
    ],
)
def test_examples(chain, expected):
    times = tuple(0.5 + i for i in range(len(chain) - 1))
    snap = build_windows(make_possession(chain, times, duration=6.0))[0]
    assert classify(snap).value == expected


def test_chain_break_raises():
    from temporal_flow.data import PassEvent
    from temporal_flow.windowing import Snapshot

    snap = Snapshot("X", 0, 0.0, 6.0, (PassEvent(1.0, "a", "b"), PassEvent(2.0, "c", "d")), "a", 24.0, False)
    with pytest.raises(ClassificationError):
        classify(snap)


@settings(max_examples=200)
@given(st.lists(st.integers(0, 6), min_size=1, max_size=7), st.permutations(range(7)))
def test_label_invariance(seq, perm):
    seq = [v for i, v in enumerate(seq) if i == 0 or v != seq[i - 1]]
    assert classify_sequence(seq) == classify_sequence([perm[v] for v in seq])


def test_class_codes_follow_order():
    assert [c.code for c in GRAPHLET_ORDER] == list(range(10))
    assert GRAPHLET_ORDER[-1] is GraphletClass.OTHER


def _snapshots(seed=0, n=30):
    rng = np.random.default_rng(seed)
    out = []
    players = ["pg", "sg", "sf", "pf", "c"]
    for i in range(n):
        k = int(rng.integers(0, 6))
        chain = [players[int(rng.integers(5))]]
        for _ in range(k):
            chain.append(rng.choice([p for p in players if p != chain[-1]]))
        times = tuple(sorted(rng.choice(np.arange(0, 12000), size=k, replace=False) / 1000))
        p = make_possession(tuple(chain), times, duration=12.0 + (i % 3), pid=f"P{i}")
        out.extend(build_windows(p).snapshots)
    return out


def test_profile_with_constant_key():
    snaps = _snapshots()
    (prof,) = build_profile(snaps, lambda s: "all")
    assert prof.total == len(snaps)
    assert prof.key == ("all",)
    assert build_profile([], lambda s: 1) == []


def test_profile_keys_by_shot_clock():
    snaps = _snapshots()
    profiles = build_profile(snaps, lambda s: s.shot_clock_at_start)
    keys = [p.key[0] for p in profiles]
    assert len(keys) <= 37 and all(6.0 <= k <= 24.0 for k in keys)
    assert sum(p.total for p in profiles) == len(snaps)


def test_entropy_examples():
    assert entropy_bits([0, 7, 0, 0, 0, 0, 0, 0, 0, 0]) == 0.0
    assert abs(entropy_bits([1] * 10) - math.log2(10)) < 1e-12
    assert abs(entropy_bits([5, 5] + [0] * 8) - 1.0) < 1e-12
    assert max_entropy() == pytest.approx(math.log2(10))
    with pytest.raises(UndefinedMetricError):
        entropy_bits([0] * 10)


@settings(max_examples=200)
@given(st.lists(st.integers(0, 50), min_size=10, max_size=10).filter(lambda c: sum(c) > 0))
def test_entropy_bounds(counts):
    h = state_entropy(GraphletProfile(("x",), tuple(counts)))
    assert -1e-12 <= h <= math.log2(10) + 1e-12
    assert (h < 1e-12) == (sum(c > 0 for c in counts) == 1)


def test_individual_profile_singleton():
    p = make_possession(("pg", "sg"), (1.0,), duration=6.0)
    snaps = build_windows(p).snapshots
    (prof,) = individual_profiles(snaps, Position.PG, PossessionType.BALL_IN, POSITIONS_OF)
    assert prof.as_dict()[GraphletClass.G12] == 1 and prof.total == 1
    assert prof.frequencies()[GraphletClass.G12.code] == 1.0


def test_individual_profile_absent_position_is_empty():
    p = make_possession(("pg", "sg"), (1.0,), duration=8.0)
    profs = individual_profiles(build_windows(p).snapshots, Position.C, PossessionType.BALL_IN, POSITIONS_OF)
    assert profs and all(pr.total == 0 for pr in profs)


def test_individual_counts_bounded_by_macro():
    snaps = _snapshots(seed=3, n=60)
    macro = {p.key[0]: p.counts for p in build_profile(snaps, lambda s: s.shot_clock_at_start)}
    for pos in Position:
        for prof in individual_profiles(snaps, pos, PossessionType.BALL_IN, POSITIONS_OF):
            m = macro[prof.key[1]]
            assert all(a <= b for a, b in zip(prof.counts, m))


def test_position_only_in_lone_carrier_windows_has_zero_entropy():
    from temporal_flow.columnar import build_tables
    from temporal_flow.analysis import individual_shot_clock_profiles
    from temporal_flow.data import filter_and_categorize
    from temporal_flow.synthgen import SynthConfig, generate

    # nobody ever passes, so every window holding the PG is a lone-carrier window
    ds = generate(SynthConfig(seed=5, n_possessions=300, pass_rates=(0.0, 0.0, 0.0)))
    an = filter_and_categorize(ds)
    ptab, wtab = build_tables(an.possessions, an.rosters)
    direct = sum(
        1 for p in an.of_type(PossessionType.BALL_IN) if _carried_by_pg(ds, p)
        for _ in build_windows(p).snapshots
    )
    profs = individual_shot_clock_profiles(ptab, wtab, Position.PG, PossessionType.BALL_IN)
    merged = np.sum([pr.counts for pr in profs], axis=0)
    assert merged[GraphletClass.G1.code] == merged.sum() == direct > 0
    assert entropy_bits(merged) == 0.0


def _carried_by_pg(ds, p):
    return ds.position_of(p.team_id, p.initial_carrier) is Position.PG
