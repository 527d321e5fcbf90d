import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from temporal_flow.columnar import build_tables
from temporal_flow.data import POSITIONS, Dataset, Position, PossessionType, filter_and_categorize
from temporal_flow.metrics import (
    Level,
    Metric,
    adapted_metric,
    fb_fc_ratio,
    flow_betweenness_play,
    flow_centrality_play,
    game_aggregate,
    game_aggregates_table,
    metric_series,
    position_rates,
    possession_adapted_score,
    ratio,
)
from temporal_flow.synthgen import SynthConfig, generate
from temporal_flow.windowing import build_windows

from conftest import POSITIONS_OF, ROSTER, make_possession

PLAYERS = ["pg", "sg", "sf", "pf", "c", "pg2"]


def oracle_roles(initial, passes, t0=None, t1=None):
    """Independent walk over a pass list: (touched, interior) player sets."""
    holder = initial
    touched, interior = set(), set()
    inside = [(t, a, b) for t, a, b in passes if t0 is None or t0 <= t < t1]
    if t0 is not None:
        for t, a, b in passes:
            if t < t0:
                holder = b
    touched.add(holder)
    for i, (t, a, b) in enumerate(inside):
        touched.add(b)
        if i + 1 < len(inside):
            interior.add(b)
    return touched, interior


def scripted(n=20, seed=0, max_passes=8):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        k = int(rng.integers(0, max_passes + 1))
        chain = [PLAYERS[int(rng.integers(6))]]
        for _ in range(k):
            chain.append(str(rng.choice([p for p in PLAYERS if p != chain[-1]])))
        duration = round(float(rng.uniform(6, 20)), 3)
        times = tuple(sorted(rng.choice(np.arange(0, int(duration * 1000)), size=k, replace=False) / 1000))
        out.append(make_possession(tuple(chain), times, duration=duration, pid=f"P{i:02d}", game=f"G{i % 2}"))
    return out


def _passes(p):
    return [(e.t, e.passer, e.receiver) for e in p.passes]


def test_quarter_involvement():
    ps = [make_possession(("pg", "sg"), (1.0,), pid="1")] + [
        make_possession(("sf", "c"), (1.0,), pid=str(i)) for i in range(2, 5)
    ]
    assert flow_centrality_play("pg", ps) == 0.25
    assert flow_centrality_play("pf", ps) == 0.0


def test_between_definition():
    p = make_possession(("a", "b", "c"), (1.0, 2.0))
    assert flow_betweenness_play("b", [p]) == 1.0
    assert flow_betweenness_play("a", [p]) == 0.0
    assert flow_betweenness_play("c", [p]) == 0.0
    for chain, times in ((("a",), ()), (("a", "b"), (1.0,))):
        q = make_possession(chain, times)
        assert all(flow_betweenness_play(x, [q]) == 0.0 for x in "ab")


def test_one_window_of_ten():
    p = make_possession(("pg", "c", "sg"), (0.2, 0.3), duration=10.5)
    assert len(build_windows(p)) == 10
    assert possession_adapted_score("c", p, Metric.FC) == pytest.approx(0.1)
    assert flow_centrality_play("c", [p]) == 1.0


def test_saturated_subject():
    p = make_possession(("pg",), (), duration=9.0)
    assert possession_adapted_score("pg", p, "FC") == 1.0 == flow_centrality_play("pg", [p])


def test_ratio():
    assert ratio(0.2, 0.8) == pytest.approx(0.25)
    assert ratio(0.4, 0.4) == 1.0
    assert ratio(0.0, 0.0) is None


def test_play_metrics_match_oracle():
    ps = scripted()
    for subject in PLAYERS:
        fc = np.mean([subject in oracle_roles(p.initial_carrier, _passes(p))[0] for p in ps])
        fb = np.mean([subject in oracle_roles(p.initial_carrier, _passes(p))[1] for p in ps])
        assert flow_centrality_play(subject, ps) == pytest.approx(fc)
        assert flow_betweenness_play(subject, ps) == pytest.approx(fb)
        r = fb_fc_ratio(subject, ps)
        assert (r is None) == (fc == 0)
        if fc:
            assert r == pytest.approx(fb / fc)


def test_adapted_metrics_match_oracle():
    ps = scripted(seed=1)
    snaps = [s for p in ps for s in build_windows(p).snapshots]
    for subject in PLAYERS:
        hits_fc, hits_fb, n = 0, 0, 0
        for p in ps:
            k = 0
            while k * 0.5 + 6.0 <= p.duration + 1e-9:
                t, b = oracle_roles(p.initial_carrier, _passes(p), k * 0.5, k * 0.5 + 6.0)
                hits_fc += subject in t
                hits_fb += subject in b
                n += 1
                k += 1
        assert n == len(snaps)
        assert adapted_metric(subject, snaps, Metric.FC) == pytest.approx(hits_fc / n)
        assert adapted_metric(subject, snaps, Metric.FB) == pytest.approx(hits_fb / n)


def test_position_subject_uses_any_player():
    ps = [make_possession(("pg2", "sg"), (1.0,), pid="1"), make_possession(("pg", "c"), (1.0,), pid="2")]
    assert flow_centrality_play(Position.PG, ps, POSITIONS_OF) == 1.0
    assert flow_centrality_play("pg2", ps) == 0.5


def test_game_aggregate_examples():
    p = make_possession(("pg",), (), duration=8.0)
    g = game_aggregate("pg", [p])
    assert (g.play_fc, g.play_fb, g.adapted_fc, g.adapted_fb) == (1.0, 0.0, 1.0, 0.0)
    q = make_possession(("pg", "c", "pg"), (1.0, 2.0), duration=7.0)
    g = game_aggregate("c", [q])
    assert (g.play_fc, g.play_fb, g.adapted_fc, g.adapted_fb) == (1.0, 1.0, 1.0, 1.0)
    g = game_aggregate("sf", [p, q])
    assert (g.play_fc, g.play_fb, g.adapted_fc, g.adapted_fb) == (0.0, 0.0, 0.0, 0.0)


def _tables(possessions, rosters=ROSTER):
    return build_tables(possessions, rosters)


def test_tables_match_reference():
    ps = scripted(n=40, seed=2)
    ptab, wtab = _tables(ps)
    snaps = [s for p in ps for s in build_windows(p).snapshots]
    for pos in POSITIONS:
        for m, ref in ((Metric.FC, flow_centrality_play), (Metric.FB, flow_betweenness_play)):
            k, n = position_rates(ptab, wtab, Level.PLAY, m, pos)
            assert k / n == pytest.approx(ref(pos, ps, POSITIONS_OF))
            k, n = position_rates(ptab, wtab, Level.GRAPHLET, m, pos)
            assert n == len(snaps)
            assert k / n == pytest.approx(adapted_metric(pos, snaps, m, POSITIONS_OF))


def test_game_table_matches_reference():
    ps = scripted(n=30, seed=3)
    ptab, wtab = _tables(ps)
    for agg in game_aggregates_table(ptab, wtab):
        subset = [p for p in ps if p.game_id == agg.game_id]
        ref = game_aggregate(Position(agg.subject), subset, POSITIONS_OF)
        for f in ("play_fc", "play_fb", "adapted_fc", "adapted_fb"):
            assert getattr(agg, f) == pytest.approx(getattr(ref, f))
        assert agg.adapted_fc_ci == pytest.approx(ref.adapted_fc_ci)


def test_series_matches_reference_and_omits_empty():
    ps = scripted(n=40, seed=4)
    ptab, wtab = _tables(ps)
    snaps = [s for p in ps for s in build_windows(p).snapshots]
    series = metric_series(ptab, wtab, Position.SG, PossessionType.BALL_IN, Metric.FC)
    clocks = sorted({s.shot_clock_at_start for s in snaps}, reverse=True)
    assert [pt.shot_clock for pt in series.points] == clocks
    for pt in series.points:
        at = [s for s in snaps if s.shot_clock_at_start == pt.shot_clock]
        assert pt.n == len(at)
        assert pt.mean == pytest.approx(adapted_metric(Position.SG, at, Metric.FC, POSITIONS_OF))
        assert pt.ci_low <= pt.mean <= pt.ci_high


def test_series_saturated_point():
    ps = [make_possession(("pg",), (), duration=7.0, pid=f"P{i}") for i in range(30)]
    ptab, wtab = _tables(ps)
    series = metric_series(ptab, wtab, Position.PG, PossessionType.BALL_IN, Metric.FC)
    for pt in series.points:
        assert pt.mean == 1.0 and pt.ci_high == 1.0 and 0.85 < pt.ci_low < 1.0


def test_series_recovers_planted_regime():
    # early phase: passes mostly reach the PG; late phase: the PG is never a receiver
    cfg = SynthConfig(
        seed=9, n_possessions=2500, duration_min=20.0, pass_rates=(1.0, 1.0, 1.0),
        receiver_weights=((20, 1, 1, 1, 1), (20, 1, 1, 1, 1), (0, 1, 1, 1, 1)),
        carrier_weights=(0, 1, 1, 1, 1), category_mix=(1, 0, 0, 0),
    )
    an = filter_and_categorize(generate(cfg))
    ptab, wtab = build_tables(an.possessions, an.rosters)
    pts = {p.shot_clock: p for p in metric_series(ptab, wtab, Position.PG, PossessionType.BALL_IN, "FC").points}
    early, late = pts[24.0], pts[6.0]
    assert early.mean > 0.9 and early.ci_low > late.ci_high
    assert late.mean < 0.6


def _relabel(ds, suffix):
    from dataclasses import replace

    from temporal_flow.data import PassEvent, PlayerRef

    f = lambda x: x + suffix  # noqa: E731
    ps = tuple(
        replace(p, initial_carrier=f(p.initial_carrier),
                passes=tuple(PassEvent(e.t, f(e.passer), f(e.receiver)) for e in p.passes))
        for p in ds.possessions
    )
    rosters = {t: tuple(PlayerRef(f(r.player_id), t, r.position) for r in refs) for t, refs in ds.rosters.items()}
    return Dataset(ps, rosters)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(5, 120))
def test_metric_inequalities(seed, n):
    ds = generate(SynthConfig(seed=seed, n_possessions=n, duration_min=6.0))
    an = filter_and_categorize(ds)
    if not an.possessions:
        return
    ptab, wtab = build_tables(an.possessions, an.rosters)
    for level in Level:
        for pos in POSITIONS:
            fc = position_rates(ptab, wtab, level, Metric.FC, pos)
            fb = position_rates(ptab, wtab, level, Metric.FB, pos)
            assert fb[0] <= fc[0]
    for agg in game_aggregates_table(ptab, wtab):
        assert agg.adapted_fc <= agg.play_fc + 1e-12
        assert agg.adapted_fb <= agg.play_fb + 1e-12
        assert agg.play_fb <= agg.play_fc and agg.adapted_fb <= agg.adapted_fc + 1e-12
    # a position is involved whenever one of its players is
    team = an.possessions[0].team_id
    own = [p for p in an.possessions if p.team_id == team]
    for pos in POSITIONS:
        players = [r.player_id for r in an.rosters[team] if r.position is pos]
        best = max(flow_centrality_play(pl, own) for pl in players)
        assert flow_centrality_play(pos, own, an.positions) >= best
    # relabelling players while keeping positions changes nothing
    an2 = filter_and_categorize(_relabel(ds, "_x"))
    ptab2, wtab2 = build_tables(an2.possessions, an2.rosters)
    for level in Level:
        for m in Metric:
            for pos in POSITIONS:
                assert position_rates(ptab, wtab, level, m, pos) == position_rates(ptab2, wtab2, level, m, pos)
