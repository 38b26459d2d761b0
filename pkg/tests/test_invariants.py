import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loewner_lab import core, invariants, sample_brownian


def test_exponent_identities():
    res = invariants.exponent_identities(n=201)
    assert res.passed, res
    assert res.worst <= 1e-10


def test_duality():
    res = invariants.duality(n=100)
    assert res.passed, res


def test_slit_roundtrip_small():
    res = invariants.slit_roundtrip(n=5000, seed=3)
    assert res.passed and res.checks >= 5000


def test_chain_roundtrip_and_reverse_identity_small():
    assert invariants.chain_roundtrip(n_chains=5, seed=1).passed
    assert invariants.reverse_identity(n_chains=5, seed=1).passed


def test_corpus_is_deterministic():
    a = invariants.chain_corpus(6, 32, seed=4)
    b = invariants.chain_corpus(6, 32, seed=4)
    assert len(a) == 6
    assert all(np.array_equal(x.v, y.v) for x, y in zip(a, b))


def test_inequality_suite_small():
    results = invariants.inequality_suite(n_chains=12, n_steps=64, seed=2)
    names = {r.name for r in results}
    assert {"koebe_x_deriv", "time_stability", "dyadic_bracketing", "beurling_upper"} <= names
    for r in results:
        assert r.passed, r


def test_result_bookkeeping():
    r = invariants.InvariantResult("x", tol=1e-3)
    r.add_errors([1e-4, 2e-3])
    assert (r.checks, r.violations, r.worst) == (2, 1, 2e-3)
    assert not r.passed
    q = invariants.InvariantResult("y")
    q.add_ratios([1.0, 2.0], [1.0, 3.0])
    assert q.passed and q.worst == 1.0
    assert not invariants.InvariantResult("empty").passed


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), kappa=st.sampled_from([0.5, 2.0, 4.0, 6.0]),
       x=st.floats(-4, 4), y=st.floats(1e-3, 1.0), r=st.floats(1.0, 5.0))
def test_koebe_bounds_on_random_chains(seed, kappa, x, y, r):
    ch = sample_brownian(kappa, 128, 1 / 128, seed).to_chain()
    vt = ch.driving_at(ch.n_steps)
    h0 = core.inverse_map(ch, vt + 1j * y)
    hx = core.inverse_map(ch, vt + y * (x + 1j))
    hr = core.inverse_map(ch, vt + 1j * y * r)
    d0, dx, dr = abs(h0.deriv), abs(hx.deriv), abs(hr.deriv)
    c = x * x + 4
    slack = 1 + 1e-12
    assert d0 / c ** 2 <= dx * slack and dx <= c ** 2 * d0 * slack
    assert abs(hx.value - h0.value) <= c ** 1.5 * abs(x) / 2 * y * d0 * slack + 1e-15
    assert d0 / r ** 3 <= dr * slack and dr <= r * d0 * slack
    assert abs(hr.value - h0.value) <= (r * r - 1) / 2 * y * d0 * slack + 1e-15


def test_invariant_result_rejects_nan():
    r = invariants.InvariantResult("n", tol=1.0)
    r.add_errors([np.nan])
    assert r.violations == 1
    with pytest.raises(AssertionError):
        assert r.passed
