import numpy as np
import pytest

from tandem_iv.model import ErasureProfile, RandomnessSpec, generate_states, message_bits
from tandem_iv.schedule import Schedule
from tandem_iv.simnet import run_bit_separation
from tandem_iv.wavefront import (detect_events, extract_fronts_from_network, fronts_match,
                                 martingale_check, martingale_increments, simulate_fronts_coupled,
                                 simulate_fronts_slotwise, write_fronts_csv)

PROFILES = [ErasureProfile.homogeneous(0.5, 12), ErasureProfile.periodic([0.2, 0.6], 9),
            ErasureProfile.homogeneous(0.0, 6)]


@pytest.mark.parametrize("profile", PROFILES)
def test_coupled_fronts_equal_slotwise(profile):
    s = Schedule.build(profile, 3, 0.5, 0.1)
    for t in range(30):
        st = generate_states(profile, s.tau[-1], RandomnessSpec(3, t))
        a = simulate_fronts_coupled(profile, s, st)
        b = simulate_fronts_slotwise(s, st)
        assert all(np.array_equal(x.positions, y.positions) for x, y in zip(a, b))
        # one position per slot, nondecreasing, unit steps
        for f in a:
            assert len(f.positions) == s.tau[f.j] - f.start + 1
            assert set(np.diff(f.positions)) <= {0, 1}


@pytest.mark.parametrize("profile", PROFILES)
def test_event_detection_agrees_with_sweep(profile):
    s = Schedule.build(profile, 3, 0.5, 0.1)
    for t in range(30):
        st = generate_states(profile, s.tau[-1], RandomnessSpec(4, t))
        bits = message_bits(st.keys, 3)[0]
        rec = run_bit_separation(profile, bits, s, st)
        ev = detect_events(simulate_fronts_coupled(profile, s, st), s)
        assert np.array_equal(ev.E, rec.escape_events)
        assert ev.overall == rec.success_event_held


def test_network_fronts_follow_abstraction_without_collision():
    p = ErasureProfile.homogeneous(0.5, 12)
    s = Schedule.build(p, 2, 1.0, 0.25)
    seen = 0
    for t in range(60):
        st = generate_states(p, s.tau[-1], RandomnessSpec(5, t))
        rec = run_bit_separation(p, [1, 0], s, st)
        if rec.collision_detected:
            continue
        seen += 1
        net = extract_fronts_from_network(rec)
        assert fronts_match(net, simulate_fronts_coupled(p, s, st), p.hops)
        assert not rec.divergence
    assert seen > 0


def test_noiseless_events_hold():
    p = ErasureProfile.homogeneous(0.0, 20)
    s = Schedule.build(p, 4, 1.0, 0.25)
    st = generate_states(p, s.tau[-1], RandomnessSpec(0))
    ev = detect_events(simulate_fronts_coupled(p, s, st), s)
    assert ev.A.all() and not ev.E.any()


def test_martingale_increments():
    vals, probs = martingale_increments(ErasureProfile.homogeneous(0.3, 5), 2, "homogeneous")
    assert vals @ probs == pytest.approx(0.0, abs=1e-15)
    p = ErasureProfile.periodic([0.2, 0.4], 6)
    vals, probs = martingale_increments(p, 1, "heterogeneous")
    assert vals.tolist() == pytest.approx([1 / 0.6 - 1, -1.0])
    assert probs.tolist() == pytest.approx([0.6, 0.4])
    out = martingale_check(p, "heterogeneous")
    assert out["max_abs_mean"] < 1e-12
    assert out["max_abs_step"] <= out["step_limit"]


def test_fronts_csv(tmp_path):
    p = ErasureProfile.homogeneous(0.5, 6)
    s = Schedule.build(p, 2, 0.5, 0.2)
    st = generate_states(p, s.tau[-1], RandomnessSpec(0))
    path = tmp_path / "fronts.csv"
    write_fronts_csv(path, {0: simulate_fronts_coupled(p, s, st)})
    lines = path.read_text().splitlines()
    assert lines[0] == "# tandem-iv schema v1"
    assert lines[1] == "trial,j,n,I"
    assert len(lines) == 2 + sum(s.tau[j] - j * s.l_sep + 1 for j in range(2))
