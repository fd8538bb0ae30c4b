import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faircc.errors import ContractViolation
from faircc.params import SystemParams
from faircc.queues import DeliveryLedger, QueueState, SlotDecision, apply_slot, cap_combinations, ledger_update


def _decision(K, a=None, gamma=None, sigma=None, mu=None, priority=None):
    n = (1 << K) - 1
    z = np.zeros
    return SlotDecision(
        a=z(K) if a is None else np.asarray(a, float),
        gamma=z(K) if gamma is None else np.asarray(gamma, float),
        sigma=z(n) if sigma is None else np.asarray(sigma, float),
        mu=z(n) if mu is None else np.asarray(mu, float),
        priority=priority,
    )


def test_admissions_only():
    p = SystemParams(2)
    res = apply_slot(QueueState.empty(2), _decision(2, a=[1, 1], gamma=[2, 0.5]), p)
    np.testing.assert_array_equal(res.state.S, [1, 1])
    np.testing.assert_array_equal(res.state.Q, 0)
    np.testing.assert_array_equal(res.state.U, [2, 0.5])


def test_combination_bits():
    p = SystemParams(3)
    sigma = np.zeros(7)
    sigma[0b011 - 1] = 1.0
    state = QueueState(np.array([1.0, 1.0, 0.0]), np.zeros(7), np.zeros(3))
    res = apply_slot(state, _decision(3, a=[0.5, 0, 0], sigma=sigma), p)
    expected = np.zeros(7)
    expected[0b001 - 1], expected[0b010 - 1], expected[0b011 - 1] = 160.0, 160.0, 240.0
    np.testing.assert_allclose(res.state.Q, expected, rtol=1e-12)
    np.testing.assert_allclose(res.state.S, [0.5, 0, 0])
    np.testing.assert_array_equal(res.combined, sigma)


def test_drain_floor():
    p = SystemParams(1)
    state = QueueState(np.zeros(1), np.array([100.0]), np.zeros(1))
    res = apply_slot(state, _decision(1, mu=[1.5]), p)
    assert res.served[0] == 100.0
    assert res.state.Q[0] == 0.0


def test_cap_by_available_files():
    p = SystemParams(2)
    t = p.tables()
    sigma = np.array([2.0, 2.0, 2.0])
    S = np.array([3.0, 1.0])
    # {1,2} has the highest priority, then {1}
    got = cap_combinations(sigma, S, t, priority=np.array([1.0, 0.0, 5.0]))
    np.testing.assert_allclose(got, [2.0, 0.0, 1.0])
    assert np.all(t.files_used(got) <= S + 1e-12)
    # default priority: ascending mask
    got = cap_combinations(sigma, S, t)
    np.testing.assert_allclose(got, [2.0, 1.0, 0.0])


def test_no_cap_when_enough():
    t = SystemParams(2).tables()
    sigma = np.array([1.0, 0.0, 1.0])
    np.testing.assert_array_equal(cap_combinations(sigma, np.array([5.0, 5.0]), t), sigma)


@pytest.mark.parametrize("field,value", [("a", [-1.0, 0.0]), ("sigma", [0.0, np.nan, 0.0]), ("mu", [0.0, 0.0])])
def test_malformed_decision(field, value):
    d = _decision(2)
    setattr(d, field, np.asarray(value))
    with pytest.raises(ContractViolation):
        apply_slot(QueueState.empty(2), d, SystemParams(2))


def test_sigma_max_enforced():
    d = _decision(2, sigma=[3.0, 0.0, 0.0])
    with pytest.raises(ContractViolation):
        apply_slot(QueueState.empty(2), d, SystemParams(2), sigma_max=2)


def test_ledger_multicast_credit():
    led = DeliveryLedger(3, 400.0)
    served = np.zeros(7)
    served[0b011 - 1] = 240.0
    ledger_update(led, served, np.zeros(3))
    np.testing.assert_array_equal(led.drained_bits, [240, 240, 0])
    assert led.t == 1


def test_ledger_no_service():
    led = DeliveryLedger(2, 400.0)
    ledger_update(led, np.zeros(3), np.zeros(2))
    np.testing.assert_array_equal(led.drained_bits, 0)
    np.testing.assert_array_equal(led.delivered_files, 0)
    with pytest.raises(ContractViolation):
        ledger_update(led, np.array([-1.0, 0, 0]), np.zeros(2))


def test_one_combination_delivers_one_file():
    # combine one demand of user 0 with users 1 and 2, then drain everything
    p = SystemParams(3)
    sigma = np.zeros(7)
    sigma[0b111 - 1] = 1.0
    state = QueueState(np.ones(3), np.zeros(7), np.zeros(3))
    res = apply_slot(state, _decision(3, sigma=sigma), p)
    led = DeliveryLedger(3, p.bits_per_file)
    ledger_update(led, res.state.Q, np.zeros(3))
    np.testing.assert_allclose(led.delivered_files, [1.0, 1.0, 1.0], rtol=1e-12)


def _random_trace(K, seed, n_slots):
    rng = np.random.default_rng(seed)
    n = (1 << K) - 1
    for _ in range(n_slots):
        yield _decision(
            K,
            a=rng.integers(0, 3, K) * (rng.random(K) < 0.5),
            gamma=rng.random(K),
            sigma=rng.integers(0, 3, n) * (rng.random(n) < 0.3),
            mu=rng.random(n) * (rng.random(n) < 0.3),
            priority=rng.random(n),
        )


@settings(max_examples=25, deadline=None)
@given(K=st.integers(1, 4), seed=st.integers(0, 10**6))
def test_nonnegative_and_credit_consistent(K, seed):
    p = SystemParams(K)
    t = p.tables()
    state = QueueState.empty(K)
    led = DeliveryLedger(K, p.bits_per_file)
    served_total = np.zeros(t.n)
    for d in _random_trace(K, seed, 60):
        res = apply_slot(state, d, p, sigma_max=2)
        ledger_update(led, res.served, d.a, res.combined, t)
        served_total += res.served
        state = res.state
        assert np.all(state.S >= 0) and np.all(state.Q >= 0) and np.all(state.U >= 0)
        assert np.all(res.served <= p.T_slot * d.mu + 1e-12)
    assert led.drained_bits.sum() == pytest.approx(float(t.sizes @ served_total), rel=1e-12)


@settings(max_examples=25, deadline=None)
@given(K=st.integers(2, 4), seed=st.integers(0, 10**6))
def test_capped_codeword_backlog_dominated(K, seed):
    # uncapped combinations put at least as many bits in every codeword queue;
    # the user queues go the other way because the cap removes fewer files
    p = SystemParams(K)
    capped, ideal = QueueState.empty(K), QueueState.empty(K)
    for d in _random_trace(K, seed, 80):
        capped = apply_slot(capped, d, p).state
        ideal = apply_slot(ideal, d, p, cap=False).state
        assert np.all(capped.Q <= ideal.Q * (1 + 1e-12) + 1e-9)
        assert np.all(capped.S >= ideal.S - 1e-12)


def test_lyapunov_backlog():
    s = QueueState(np.array([1.0, 2.0]), np.array([1e6, 0, 2e6]), np.array([0.5, 0.5]))
    assert s.lyapunov_backlog(1000.0) == pytest.approx(7.0)
