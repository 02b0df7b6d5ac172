import math

import numpy as np
import pytest

from spdcqkd.attack import (AttackConfig, SplitMode, attack_four_photon,
                            intercept_resend, split_channel)
from spdcqkd.fock import FockError, StateVector, attack_registry, source_registry
from spdcqkd.optics import DA, HV
from spdcqkd.source import four_photon_component, singlet_state

SQ3 = math.sqrt(3.0)


def assert_states_close(x, y, tol=1e-12):
    assert (x - y).norm() <= tol, f"states differ:\n{x.dumps()}\nvs\n{y.dumps()}"


def psi4_full():
    return four_photon_component(attack_registry())


def test_per_attempt_probability_on_two_same_photons():
    # |2,0> channel content: both photons in one polarization
    st = StateVector(attack_registry(), {(2, 0, 0, 0, 0, 0, 0, 0): 1.0})
    res = split_channel(st, "A", 0, "E1")
    assert res.per_attempt_probability == pytest.approx(0.5, abs=1e-12)
    assert res.success


def test_per_attempt_probability_on_orthogonal_pair():
    # H+V channel content
    st = StateVector(attack_registry(), {(1, 1, 0, 0, 0, 0, 0, 0): 1.0})
    res = split_channel(st, "A", 0, "E1")
    assert res.per_attempt_probability == pytest.approx(0.5, abs=1e-12)


def test_split_success_takes_exactly_one_photon():
    st = StateVector(attack_registry(), {(2, 0, 0, 0, 0, 0, 0, 0): 1.0})
    res = split_channel(st, "A", 0, "E1")
    for occ, _ in res.state.terms():
        assert occ[0] + occ[1] == 1  # one left for Alice
        assert occ[4] + occ[5] == 1  # one held by Eve


def test_split_requires_two_photons():
    st = singlet_state(attack_registry())
    with pytest.raises(FockError):
        split_channel(st, "A", 0, "E1")


def test_attack_pipeline_reproduces_four_photon_attack_state():
    st = psi4_full()
    st = split_channel(st, "A", 0, "E1").state
    st = split_channel(st, "B", 0, "E2").state
    assert_states_close(st, attack_four_photon())


def test_attack_state_amplitudes():
    # modes: A-H A-V B-H B-V E1-H E1-V E2-H E2-V
    st = attack_four_photon()
    c = 1.0 / (2.0 * SQ3)
    expected = {
        (1, 0, 0, 1, 1, 0, 0, 1): 2 * c,   # |HV>_AB |HV>_E
        (1, 0, 0, 1, 0, 1, 1, 0): -c,      # |HV>_AB |VH>_E
        (0, 1, 1, 0, 0, 1, 1, 0): 2 * c,   # |VH>_AB |VH>_E
        (0, 1, 1, 0, 1, 0, 0, 1): -c,      # |VH>_AB |HV>_E
        (1, 0, 1, 0, 0, 1, 0, 1): -c,      # |HH>_AB |VV>_E
        (0, 1, 0, 1, 1, 0, 1, 0): -c,      # |VV>_AB |HH>_E
    }
    assert len(st) == len(expected)
    for occ, amp in expected.items():
        assert st.amplitude(occ) == pytest.approx(amp, abs=1e-12)
    assert st.norm() == pytest.approx(1.0, abs=1e-12)


def test_attack_state_golden_dump():
    c = 1.0 / (2.0 * SQ3)
    lines = attack_four_photon().dump_lines()
    assert lines == [
        f"0,1,0,1,1,0,1,0 {-c:.12g} 0",
        f"0,1,1,0,0,1,1,0 {2 * c:.12g} 0",
        f"0,1,1,0,1,0,0,1 {-c:.12g} 0",
        f"1,0,0,1,0,1,1,0 {-c:.12g} 0",
        f"1,0,0,1,1,0,0,1 {2 * c:.12g} 0",
        f"1,0,1,0,0,1,0,1 {-c:.12g} 0",
    ]


def test_analytic_split_reports_success_and_attempt_budget():
    st = psi4_full()
    res = split_channel(st, "A", 0, "E1", AttackConfig(max_attempts=5))
    assert res.success
    assert res.attempts <= 5
    assert res.per_attempt_probability == pytest.approx(0.5)


def test_monte_carlo_split_matches_analytic_on_success():
    st = psi4_full()
    analytic = split_channel(st, "A", 0, "E1").state
    rng = np.random.default_rng(3)
    cfg = AttackConfig(max_attempts=50, mode=SplitMode.MONTE_CARLO)
    res = split_channel(st, "A", 0, "E1", cfg, rng=rng)
    assert res.success
    assert_states_close(res.state, analytic)


def test_monte_carlo_split_failure_passes_input_through():
    st = psi4_full()
    failures = successes = 0
    attempts = []
    for seed in range(400):
        rng = np.random.default_rng(seed)
        res = split_channel(st, "A", 0, "E1",
                            AttackConfig(max_attempts=1, mode=SplitMode.MONTE_CARLO),
                            rng=rng)
        attempts.append(res.attempts)
        if res.success:
            successes += 1
        else:
            failures += 1
            assert_states_close(res.state, st)
    # one attempt at probability 1/2: a 3-sigma band around 200 each
    assert abs(successes - 200) < 3 * math.sqrt(400 * 0.25)
    assert set(attempts) == {1}


def test_monte_carlo_attempt_counts_are_geometric():
    st = psi4_full()
    counts = {}
    for seed in range(600):
        res = split_channel(st, "A", 0, "E1",
                            AttackConfig(max_attempts=30, mode=SplitMode.MONTE_CARLO),
                            rng=np.random.default_rng(seed))
        assert res.success  # 2^-30 failure chance; treat as impossible
        counts[res.attempts] = counts.get(res.attempts, 0) + 1
    assert counts[1] > counts.get(2, 0) > counts.get(3, 0)
    assert abs(counts[1] - 300) < 3 * math.sqrt(600 * 0.25)


def test_monte_carlo_split_requires_rng():
    with pytest.raises(FockError):
        split_channel(psi4_full(), "A", 0, "E1",
                      AttackConfig(mode=SplitMode.MONTE_CARLO))


def test_attack_config_validation():
    with pytest.raises(FockError):
        AttackConfig(max_attempts=0)


def test_intercept_resend_collapses_partner():
    st = singlet_state()
    bits = set()
    for seed in range(12):
        res = intercept_resend(st, "A", 0, HV, np.random.default_rng(seed))
        bits.add(res.bit)
        # partner photon is anti-correlated with the measured bit
        idx = 2 + (1 - res.bit)
        prob, _ = res.state.project(lambda occ, i=idx: occ[i] == 1)
        assert prob == pytest.approx(1.0)
    assert bits == {0, 1}


def test_intercept_resend_wrong_basis_decoheres():
    # Eve reads D/A; the resent photon is a D/A eigenstate, so Alice's H/V
    # outcome no longer pins down Bob's
    st = singlet_state()
    res = intercept_resend(st, "A", 0, DA, np.random.default_rng(5))
    prob_h, _ = res.state.project(lambda occ: occ[0] == 1)
    prob_v, _ = res.state.project(lambda occ: occ[1] == 1)
    assert prob_h == pytest.approx(0.5, abs=1e-12)
    assert prob_v == pytest.approx(0.5, abs=1e-12)


def test_intercept_resend_empty_channel():
    st = StateVector.vacuum(source_registry())
    res = intercept_resend(st, "A", 0, HV, np.random.default_rng(0))
    assert res.bit is None


def test_intercept_resend_rejects_multiphoton_channel():
    st = StateVector(source_registry(), {(2, 0, 0, 2): 1.0})
    with pytest.raises(FockError):
        intercept_resend(st, "A", 0, HV, np.random.default_rng(0))
