import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sybiltag.exceptions import ConfigurationError, SingularityError
from sybiltag.scene import (
    NOISE_LEVELS,
    ScenarioConfig,
    TransmissionEvent,
    direct_power,
    fake_id_owner_static,
    generate_trajectories,
    iter_slot_traces,
    preset,
    reflected_power,
    ring_offsets,
    schedule_transmissions,
    synthesize_received_signal,
)


def test_defaults_validate():
    cfg = ScenarioConfig().validate()
    assert cfg.num_ids == 6
    assert cfg.ids == ["legit-0", "legit-1", "fake-0", "fake-1", "fake-2", "fake-3"]
    assert cfg.receiver_position == (2.25, 2.75)
    assert len(cfg.tag_offsets) == 4


def test_validation_collects_every_problem():
    with pytest.raises(ConfigurationError) as exc:
        ScenarioConfig(num_attackers=3, num_fake_ids=4, num_tags=0, tag_gain=-1, attack_mode="nope").validate()
    fields = {f for f, _ in exc.value.problems}
    assert {"num_fake_ids", "num_tags", "tag_gain", "attack_mode"} <= fields


def test_colluding_needs_divisible_ids():
    with pytest.raises(ConfigurationError):
        ScenarioConfig(attack_mode="colluding", num_attackers=2, num_fake_ids=3).validate()


def test_unknown_preset():
    with pytest.raises(ConfigurationError):
        preset("basement")


def test_json_round_trip(tmp_path):
    cfg = preset("rooftop", attack_mode="power_scaling", rng_seed=11)
    cfg.save(tmp_path / "c.json")
    assert ScenarioConfig.load(tmp_path / "c.json") == cfg


def test_from_dict_rejects_unknown_fields():
    with pytest.raises(ConfigurationError) as exc:
        ScenarioConfig.from_dict({"bogus": 1})
    assert exc.value.problems[0][0] == "bogus"


def test_with_resets_tag_ring_on_tag_count_change():
    cfg = ScenarioConfig().with_(num_tags=2)
    assert len(cfg.tag_offsets) == 2
    cfg.validate()


def test_noise_levels():
    cfg = ScenarioConfig().with_noise("none")
    assert cfg.noise_sigma == 0 and cfg.multipath_sigma == 0
    assert (ScenarioConfig().noise_sigma, ScenarioConfig().multipath_sigma) == NOISE_LEVELS["moderate"]
    with pytest.raises(ConfigurationError):
        cfg.with_noise("deafening")


def test_trajectories_shape_speed_and_bounds():
    cfg = preset("office", num_slots=80, rng_seed=3)
    trajs = generate_trajectories(cfg)
    assert len(trajs) == cfg.num_robots
    step = cfg.robot_speed * cfg.slot_interval
    for t in trajs:
        assert t.positions.shape == (80, 2)
        assert (t.positions >= 0).all()
        assert (t.positions[:, 0] <= cfg.arena_width).all() and (t.positions[:, 1] <= cfg.arena_height).all()
        hops = np.hypot(*np.diff(t.positions, axis=0).T)
        assert (hops <= step + 1e-9).all()


def test_trajectories_keep_clear_of_receiver_and_tags():
    cfg = preset("office", num_slots=150, rng_seed=5)
    obstacles = np.vstack([cfg.receiver_position, cfg.tag_positions()])
    for t in generate_trajectories(cfg):
        d = np.hypot(*(t.positions[:, None, :] - obstacles[None]).transpose(2, 0, 1))
        assert d.min() >= cfg.min_clearance - 1e-9


def test_trajectories_deterministic():
    cfg = preset("office", rng_seed=9)
    a, b = generate_trajectories(cfg), generate_trajectories(cfg)
    assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))


def test_tiny_arena_rejected():
    cfg = ScenarioConfig(arena_width=0.5, arena_height=0.5, num_legit=4)
    with pytest.raises(ConfigurationError):
        generate_trajectories(cfg)


def test_basic_schedule_static_ownership():
    cfg = ScenarioConfig(num_legit=2, num_attackers=2, num_fake_ids=4)
    owner = fake_id_owner_static(cfg)
    assert owner == {"fake-0": 0, "fake-1": 0, "fake-2": 1, "fake-3": 1}
    evs = schedule_transmissions(cfg, 0)
    assert [e.claimed_id for e in evs] == cfg.ids
    assert [e.emitter for e in evs] == [0, 1, 2, 2, 3, 3]
    assert all(e.transmit_power == 1.0 for e in evs)


def test_power_scaling_draws_from_set():
    cfg = ScenarioConfig(attack_mode="power_scaling", num_slots=50)
    powers = {e.transmit_power for s in range(50) for e in schedule_transmissions(cfg, s) if e.claimed_id.startswith("fake")}
    assert powers == {0.3, 0.6, 0.9}


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(1, 3), st.integers(0, 1000), st.integers(0, 49))
def test_colluding_partition_property(att, per, seed, slot):
    cfg = ScenarioConfig(attack_mode="colluding", num_attackers=att, num_fake_ids=att * per, rng_seed=seed, num_slots=50)
    evs = [e for e in schedule_transmissions(cfg, slot) if e.claimed_id.startswith("fake")]
    assert sorted(e.claimed_id for e in evs) == sorted(f"fake-{j}" for j in range(att * per))
    by_attacker = {}
    for e in evs:
        by_attacker.setdefault(e.emitter, []).append(e.claimed_id)
    assert len(by_attacker) == att
    assert all(len(v) == per for v in by_attacker.values())


def test_colluding_partition_changes_over_slots():
    cfg = ScenarioConfig(attack_mode="colluding", num_slots=40)
    seen = {tuple(e.emitter for e in schedule_transmissions(cfg, s)) for s in range(40)}
    assert len(seen) > 1


def test_friis_hand_example():
    cfg = ScenarioConfig(tag_offsets=((1.0, 0.0),), num_tags=1, tag_gain=2.0, receiver_position=(0.0, 0.0),
                         arena_width=10, arena_height=10)
    # emitter 2 m from the tag, tag 1 m from the receiver
    assert reflected_power((3.0, 0.0), 1.0, cfg)[0] == pytest.approx(2.0 / 4.0)
    assert direct_power((3.0, 0.0), 1.0, cfg) == pytest.approx(1 / 9)


def test_reflected_power_linear_in_transmit_power():
    cfg = ScenarioConfig()
    a = reflected_power((0.5, 0.5), 1.0, cfg)
    assert np.allclose(reflected_power((0.5, 0.5), 0.5, cfg), a / 2, rtol=1e-15)


def test_singularity():
    cfg = ScenarioConfig()
    with pytest.raises(SingularityError):
        reflected_power(cfg.tag_positions()[0], 1.0, cfg)
    with pytest.raises(SingularityError):
        direct_power(cfg.receiver_position, 1.0, cfg)


def test_amplitude_domain_is_sqrt():
    cfg = ScenarioConfig(signal_domain="amplitude").with_noise("none")
    tpl = cfg.template()
    tr = synthesize_received_signal(TransmissionEvent(0, "legit-0", 0), np.array([1.0, 1.0]), cfg,
                                    np.random.default_rng(0), tpl)
    assert np.allclose(tr.reflection_levels, np.sqrt(reflected_power((1.0, 1.0), 1.0, cfg)))


def test_trace_layout_and_noise_clip():
    cfg = ScenarioConfig(noise_sigma=5.0, multipath_sigma=0.0)
    tpl = cfg.template()
    tr = synthesize_received_signal(TransmissionEvent(0, "legit-0", 0), np.array([1.0, 1.0]), cfg,
                                    np.random.default_rng(0), tpl)
    spb = cfg.samples_per_bit
    assert spb <= tr.ground_truth_start <= 3 * spb
    assert 2 * spb + tpl.length <= len(tr) <= 6 * spb + tpl.length
    assert tr.samples.min() >= 0


def test_iter_slot_traces_reproducible():
    cfg = preset("office", num_slots=3, rng_seed=2)
    a = [t.samples for _, t in iter_slot_traces(cfg)]
    b = [t.samples for _, t in iter_slot_traces(cfg)]
    assert len(a) == 3 * cfg.num_ids
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_ring_offsets_radius():
    off = np.array(ring_offsets(5, 0.4))
    assert np.allclose(np.hypot(off[:, 0], off[:, 1]), 0.4)


def test_config_dict_is_json_serialisable():
    json.dumps(ScenarioConfig().to_dict())
