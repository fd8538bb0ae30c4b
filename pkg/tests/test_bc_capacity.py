import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faircc.bc_capacity import (
    ReducedWeights,
    allocate_power,
    capacity_slack,
    envelope_owner,
    layer_order,
    rates_from_power,
    reduce_weights,
    solve_wsr,
    wsr_bruteforce,
)
from faircc.errors import DomainError

H2 = [1.0, 0.5]


def test_reduce_weights_examples():
    r = reduce_weights({1: 1.0, 2: 3.0, 3: 2.0}, H2)
    np.testing.assert_array_equal(r.theta_tilde, [1.0, 3.0])
    np.testing.assert_array_equal(r.argsubset, [0b01, 0b10])

    r = reduce_weights({3: 5.0}, H2)
    np.testing.assert_array_equal(r.theta_tilde, [0.0, 5.0])
    assert r.argsubset[1] == 0b11


def test_reduce_weights_constant():
    r = reduce_weights(np.full(15, 2.5), [0.3, 1.0, 0.7, 0.1])
    np.testing.assert_array_equal(r.theta_tilde, [2.5] * 4)
    # ties go to the largest subset: the weakest layer takes everyone
    assert r.argsubset[-1] == 0b1111


def test_reduce_weights_tie_smallest_mask():
    # equal gains: layer order is the user index, so user 2 is the weakest layer
    theta = np.zeros(7)
    theta[0b011 - 1] = 1.0
    theta[0b110 - 1] = 1.0
    r = reduce_weights(theta, [1.0, 1.0, 1.0])
    assert r.argsubset[2] == 0b110
    theta[0b101 - 1] = 1.0
    r = reduce_weights(theta, [1.0, 1.0, 1.0])
    assert r.argsubset[2] == 0b101


def test_layer_order_stable():
    np.testing.assert_array_equal(layer_order([0.5, 1.0, 0.5, 1.0]), [1, 3, 0, 2])


def test_allocate_power_examples():
    p = allocate_power(ReducedWeights(np.array([0]), np.array([1.0]), np.array([1])), [1.0], 10.0)
    np.testing.assert_allclose(p, [10.0])
    p = allocate_power(ReducedWeights(np.array([0, 1]), np.array([1.0, 1.0]), np.array([1, 2])), H2, 10.0)
    np.testing.assert_allclose(p, [10.0, 0.0])
    p = allocate_power(ReducedWeights(np.array([0, 1]), np.array([1.0, 2.0]), np.array([1, 2])), H2, 10.0)
    np.testing.assert_allclose(p, [0.0, 10.0])
    with pytest.raises(DomainError):
        allocate_power(ReducedWeights(np.array([0]), np.array([1.0]), np.array([1])), [1.0], -1.0)


def test_allocate_power_grid_oracle():
    # two layers crossing inside the budget
    r = ReducedWeights(np.array([0, 1]), np.array([1.0, 1.5]), np.array([1, 2]))
    h = np.array([1.0, 0.25])
    p1 = np.arange(0.0, 10.0 + 1e-9, 1e-3)
    obj = 1.0 * np.log2(1 + h[0] * p1) + 1.5 * (np.log2(1 + 10 * h[1]) - np.log2(1 + h[1] * p1))
    p = allocate_power(r, h, 10.0)
    assert p[0] == pytest.approx(p1[np.argmax(obj)], abs=1e-3)
    assert p.sum() == pytest.approx(10.0)


def test_rates_from_power_examples():
    assert rates_from_power([10.0], [1.0])[0] == pytest.approx(math.log2(11))
    np.testing.assert_array_equal(rates_from_power([0.0, 0.0], H2), [0.0, 0.0])
    np.testing.assert_allclose(rates_from_power([0.0, 10.0], H2), [0.0, math.log2(6)])


def test_solve_wsr_examples():
    a = solve_wsr(np.zeros(3), H2, 10.0)
    assert a.wsr == 0.0 and not a.mu.any() and not a.p.any()

    a = solve_wsr({1: 1.0, 2: 2.0}, H2, 10.0)
    assert a.mu[0b10 - 1] == pytest.approx(math.log2(6))
    assert a.mu[0b01 - 1] == 0.0
    assert a.wsr == pytest.approx(2 * math.log2(6))
    assert a.wsr == pytest.approx(5.1699, abs=1e-4)

    a = solve_wsr({3: 1.0}, H2, 10.0)
    assert a.mu[0b11 - 1] == pytest.approx(math.log2(6))
    assert a.wsr == pytest.approx(2.585, abs=1e-3)
    np.testing.assert_allclose(a.p_user, [0.0, 10.0])


def test_bruteforce_examples():
    assert wsr_bruteforce([3.0], [2.0], 5.0) == pytest.approx(3 * math.log2(11), rel=1e-12)
    assert wsr_bruteforce(np.zeros(3), H2, 10.0) == 0.0
    for theta in ({1: 1.0, 2: 2.0}, {3: 1.0}, {1: 1.0, 2: 3.0, 3: 2.0}):
        assert wsr_bruteforce(theta, H2, 10.0) == pytest.approx(solve_wsr(theta, H2, 10.0).wsr, rel=1e-3)
    with pytest.raises(DomainError):
        wsr_bruteforce(np.zeros(31), np.ones(5), 1.0)


def _instance(seed):
    rng = np.random.default_rng(seed)
    K = int(rng.integers(2, 6))
    theta = rng.random((1 << K) - 1) * (rng.random((1 << K) - 1) < 0.8)
    return theta, rng.exponential(1.0, K), float(rng.uniform(0.1, 30.0))


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), e=st.integers(-30, 30))
def test_scale_invariance_exact_for_powers_of_two(seed, e):
    theta, h, P = _instance(seed)
    c = 2.0**e
    a, b = solve_wsr(theta, h, P), solve_wsr(c * theta, h, P)
    np.testing.assert_array_equal(a.p, b.p)
    np.testing.assert_array_equal(a.mu, b.mu)
    assert b.wsr == c * a.wsr


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), c=st.floats(1e-3, 1e3))
def test_scale_invariance(seed, c):
    # c * theta is rounded, so crossings can move by an ulp
    theta, h, P = _instance(seed)
    a, b = solve_wsr(theta, h, P), solve_wsr(c * theta, h, P)
    np.testing.assert_array_equal(a.argsubset, b.argsubset)
    np.testing.assert_allclose(a.p, b.p, rtol=0, atol=1e-12 * P)
    np.testing.assert_allclose(a.mu, b.mu, rtol=1e-12, atol=1e-12)
    assert b.wsr == pytest.approx(c * a.wsr, rel=1e-12)


@settings(max_examples=150, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_budget_and_region(seed):
    theta, h, P = _instance(seed)
    a = solve_wsr(theta, h, P)
    assert np.all(a.p >= 0) and np.all(a.mu >= 0)
    if np.any(a.theta_tilde > 0):
        assert a.p.sum() == pytest.approx(P, rel=1e-12)
    else:
        assert a.p.sum() == 0.0
    assert np.count_nonzero(a.mu) <= len(h)
    assert capacity_slack(a.mu, a.p_user, h) <= 1e-9


def test_envelope_owner_attains_max():
    rng = np.random.default_rng(11)
    for _ in range(30):
        theta, h, P = _instance(int(rng.integers(2**31)))
        r = reduce_weights(theta, h)
        hs = np.asarray(h)[r.order]
        for z in rng.uniform(0, P, 100):
            k = envelope_owner(r, h, P, z)
            vals = r.theta_tilde / (1.0 / hs + z)
            assert vals[k] >= vals.max() * (1 - 1e-12)


def test_zero_gain_user_gets_no_power():
    a = solve_wsr(np.ones(3), [1.0, 0.0], 5.0)
    assert a.p_user[1] == 0.0
    assert a.p_user[0] == pytest.approx(5.0)


def test_equal_gains_coincident():
    a = solve_wsr({1: 1.0, 2: 1.0}, [0.7, 0.7], 4.0)
    assert a.p.sum() == pytest.approx(4.0)
    assert a.wsr == pytest.approx(math.log2(1 + 0.7 * 4.0))


def test_oracle_small_sample():
    rng = np.random.default_rng(3)
    for _ in range(60):
        K = int(rng.integers(2, 5))
        theta = rng.random((1 << K) - 1)
        h = rng.exponential(1.0, K)
        P = float(rng.uniform(1.0, 20.0))
        ref = wsr_bruteforce(theta, h, P)
        assert abs(solve_wsr(theta, h, P).wsr - ref) <= 1e-3 * max(1.0, ref)
