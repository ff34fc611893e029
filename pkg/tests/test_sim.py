import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sic_aloha import analytics as an
from sic_aloha.channel import ChannelParams, EqualSnr
from sic_aloha.sic import SlotReception, decode_slot
from sic_aloha.sim import (
    ADRA, SIC_RA, STANDARD, ConfigError, ScenarioConfig, Simulator, ap_receive, place_nodes,
    policy_decision, run, run_once,
)

SMALL = dict(n_slots=5_000, n_runs=2)


class Link:
    gamma = 1.0
    noise_power = 1.0


def test_runs_are_deterministic():
    cfg = ScenarioConfig(n_nodes=4, tx_prob=0.3, arrival_prob=0.1, **SMALL)
    a, b = run(cfg), run(cfg)
    for m in ("q_s", "avg_aoi", "throughput", "deadline_violation"):
        assert np.array_equal(a.per_seed(m), b.per_seed(m))


def test_seed_changes_outcome():
    cfg = ScenarioConfig(n_nodes=4, tx_prob=0.3, arrival_prob=0.1, **SMALL)
    assert run(cfg).avg_aoi != run(cfg.replace(seed=2)).avg_aoi


def test_parallel_runs_match_serial():
    cfg = ScenarioConfig(n_nodes=3, tx_prob=0.3, arrival_prob=0.1, n_slots=3000, n_runs=3)
    assert np.array_equal(run(cfg, jobs=2).per_seed("avg_aoi"), run(cfg).per_seed("avg_aoi"))


def test_step_matches_advance():
    cfg = ScenarioConfig(n_nodes=4, tx_prob=0.4, arrival_prob=0.2, n_slots=3000, n_runs=1)
    stepped = Simulator(cfg)
    for _ in range(cfg.n_slots):
        stepped.step()
    bulk = Simulator(cfg)
    bulk.advance(cfg.n_slots)
    assert stepped.result().avg_aoi == bulk.result().avg_aoi
    assert np.array_equal(stepped.aoi, bulk.aoi)


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 6), p=st.floats(0.05, 1.0), pa=st.floats(0.0, 1.0),
       drop=st.booleans(), seed=st.integers(0, 10**6))
def test_update_conservation(n, p, pa, drop, seed):
    cfg = ScenarioConfig(n_nodes=n, tx_prob=p, arrival_prob=pa, drop_on_deadline=drop,
                         n_slots=2000, n_runs=1, seed=seed)
    r = run_once(cfg)
    assert r.generated_total == r.delivered_total + r.dropped_total + r.queued_total
    assert 0.0 <= r.throughput <= n
    for v in (r.q_s, r.deadline_violation, r.drop_rate):
        assert math.isnan(v) or 0.0 <= v <= 1.0


def test_decoded_slots_agree_with_decoder():
    cfg = ScenarioConfig(n_nodes=6, tx_prob=0.5, arrival_prob=0.9, sigma_eps_sq=0.1,
                         n_slots=1000, n_runs=1)
    sim = Simulator(cfg)
    ch = cfg.channel
    seen = 0
    for _ in range(1000):
        out = sim.step()
        if not out.transmitters:
            continue
        rec = SlotReception(np.array(out.transmitters), np.array(out.true_power),
                            np.array(out.estimated_power), np.array(out.residual_power))
        res = decode_slot(rec, ch, "imperfect")
        assert res.order == out.order and res.decoded_count == out.decoded_count
        seen += len(out.transmitters) > 1
    assert seen > 50


def test_aoi_sawtooth():
    cfg = ScenarioConfig(n_nodes=3, tx_prob=0.5, arrival_prob=0.3, n_slots=2000, n_runs=1)
    sim = Simulator(cfg, trace=True)
    sim.advance(2000)
    aoi = sim.trace_aoi
    step = np.diff(aoi, axis=0)
    # AoI grows by one or resets to a value no larger than before
    assert np.all((step == 1) | (step <= 0))
    assert aoi.min() >= 1


def test_idle_network():
    cfg = ScenarioConfig(n_nodes=3, arrival_prob=0.0, n_slots=100, n_runs=1, warmup_fraction=0.0)
    sim = Simulator(cfg, trace=True)
    sim.advance(100)
    assert not sim.trace_ntx.any()
    assert np.array_equal(sim.trace_aoi[:, 0], np.arange(1, 101))


def test_single_node_perfect_channel():
    cfg = ScenarioConfig(n_nodes=1, tx_prob=1.0, arrival_prob=0.5, channel=EqualSnr(snr_db=300.0),
                         n_slots=20_000, n_runs=1)
    r = run_once(cfg)
    assert r.q_s == 1.0
    assert r.mean_delay == 1.0
    assert r.avg_aoi == pytest.approx(3.0, rel=0.02)


def test_q_s_matches_closed_form_when_saturated():
    cfg = ScenarioConfig(n_nodes=5, tx_prob=0.14, arrival_prob=0.4, n_slots=100_000, n_runs=10)
    rep = run(cfg)
    expected = an.success_update_prob(cfg.budget())
    assert abs(rep.q_s - expected) < 3 * rep.stderr("q_s")


def test_adra_threshold_zero_matches_standard():
    # AoI is always >= 1, so threshold 0 never blocks; both use the collision receiver
    base = ScenarioConfig(n_nodes=4, tx_prob=0.3, arrival_prob=0.1, policy=STANDARD,
                          n_slots=5000, n_runs=1)
    a = run_once(base)
    b = run_once(base.replace(policy=ADRA, age_threshold=0))
    assert a.avg_aoi == b.avg_aoi and a.throughput == b.throughput


@pytest.mark.parametrize("p", [0.05, 0.1, 0.2])
def test_adra_delay_not_below_sic_ra(p):
    base = ScenarioConfig(n_nodes=10, tx_prob=p, arrival_prob=0.01, n_slots=20_000, n_runs=2,
                          drop_on_deadline=False)
    sic = run(base).mean_delay
    adra = run(base.replace(policy=ADRA, age_threshold=20)).mean_delay
    assert adra >= sic


def test_adra_decision_distribution(rng):
    n = 100_000
    sic = np.mean([policy_decision(SIC_RA, 5, 0.3, rng) for _ in range(n)])
    adra = np.mean([policy_decision(ADRA, 5, 0.3, rng, age_threshold=0) for _ in range(n)])
    se = math.sqrt(2 * 0.3 * 0.7 / n)
    assert abs(sic - adra) < 4 * se


def test_policy_decision_examples(rng):
    assert not any(policy_decision(ADRA, 10, 1.0, rng, age_threshold=10) for _ in range(100))
    assert all(policy_decision(SIC_RA, 1, 1.0, rng) for _ in range(100))


def test_ap_receive():
    two = SlotReception.perfect({0: 10.0, 1: 3.0})
    assert ap_receive(STANDARD, two, Link) == []
    assert ap_receive(STANDARD, SlotReception.perfect({4: 1.0}), Link) == [4]
    assert ap_receive(STANDARD, SlotReception.perfect({4: 0.5}), Link) == []
    assert ap_receive(SIC_RA, two, Link) == [0, 1]
    assert ap_receive(SIC_RA, SlotReception.perfect({0: 10.0, 1: 0.1}), Link) == [0]


def test_standard_policy_never_decodes_collisions():
    cfg = ScenarioConfig(n_nodes=5, tx_prob=0.5, arrival_prob=0.9, policy=STANDARD,
                         n_slots=5000, n_runs=1)
    r = run_once(cfg)
    assert r.decoded_hist[2:].sum() == 0
    assert r.tx_hist[2:].sum() > 0


def test_geometric_placement_inside_area(rng):
    cfg = ScenarioConfig(n_nodes=200, channel=ChannelParams(), area_m=100.0)
    profiles = place_nodes(cfg, rng)
    d = np.array([p.distance_m for p in profiles])
    assert d.min() >= 1.0 and d.max() <= 50 * math.sqrt(2)
    assert all(p.lam * p.mean_rx_power == pytest.approx(1.0) for p in profiles)


def test_geometric_run():
    cfg = ScenarioConfig(n_nodes=5, tx_prob=0.2, arrival_prob=0.05, channel=ChannelParams(),
                         n_slots=5000, n_runs=2)
    rep = run(cfg)
    assert 0 < rep.throughput <= 5


def test_common_random_numbers_across_csi():
    # same arrivals and access coins: only decoding differs
    base = ScenarioConfig(n_nodes=4, tx_prob=0.3, arrival_prob=0.2, n_slots=3000, n_runs=1)
    a = run_once(base)
    b = run_once(base.replace(sigma_eps_sq=0.05))
    assert a.generated_total == b.generated_total


@pytest.mark.parametrize("kwargs, field", [
    (dict(n_nodes=0), "n_nodes"),
    (dict(tx_prob=1.2), "tx_prob"),
    (dict(arrival_prob=-0.1), "arrival_prob"),
    (dict(deadline_slots=0), "deadline_slots"),
    (dict(policy="csma"), "policy"),
    (dict(policy=ADRA), "age_threshold"),
    (dict(sigma_eps_sq=-1.0), "sigma_eps_sq"),
    (dict(channel=ChannelParams(), area_m=0.0), "area_m"),
    (dict(n_slots=0), "n_slots"),
    (dict(n_runs=0), "n_runs"),
])
def test_config_validation(kwargs, field):
    with pytest.raises(ConfigError) as err:
        ScenarioConfig(**kwargs).validate()
    assert err.value.field == field


def test_budget_needs_equal_snr():
    with pytest.raises(ConfigError):
        ScenarioConfig(channel=ChannelParams()).budget()


def test_budget_maps_error_variance():
    b = ScenarioConfig(sigma_eps_sq=0.05).budget()
    assert b.lam / b.csi_v == pytest.approx(0.05)
    assert math.isinf(ScenarioConfig().budget().csi_v)
    assert ScenarioConfig(sigma_eps_sq=0.05, analytic_csi_v=3.0).budget().csi_v == 3.0


def test_report_statistics():
    cfg = ScenarioConfig(n_nodes=3, tx_prob=0.3, arrival_prob=0.1, n_slots=2000, n_runs=4)
    rep = run(cfg)
    vals = rep.per_seed("avg_aoi")
    assert rep.mean("avg_aoi") == pytest.approx(vals.mean())
    assert rep.ci_half_width("avg_aoi") > rep.stderr("avg_aoi") > 0
