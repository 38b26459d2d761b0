import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from loewner_lab import core
from loewner_lab.core import DrivingStep, HalfPlanePoint, SlitMapChain
from loewner_lab.driving import deterministic_driver, sample_brownian
from loewner_lab.errors import DomainError, ParameterError, RangeError


def ode_forward(z, v, a, t):
    """Integrate dg/dt = a/(g - v) for constant v."""

    def rhs(_, y):
        w = a / complex(y[0] - v, y[1])
        return [w.real, w.imag]

    sol = solve_ivp(rhs, (0.0, t), [z.real, z.imag], method="DOP853", rtol=1e-13, atol=1e-14)
    return complex(sol.y[0, -1], sol.y[1, -1])


def chain_const(v, a, dt, n):
    return SlitMapChain.from_steps(a, [(dt, v)] * n)


# ---------------------------------------------------------------- elementary maps


def test_slit_forward_examples():
    assert core.slit_forward(2j, 0.0, 1.0, 0.5) == pytest.approx(1j * math.sqrt(3), abs=1e-15)
    assert core.slit_forward(1j, 0.0, 1.0, 1e-300) == pytest.approx(1j)
    assert core.slit_forward_deriv(2j, 0.0, 1.0, 0.5) == pytest.approx(2 / math.sqrt(3), rel=1e-15)
    assert core.slit_forward_deriv(1 + 1j, 0.0, 1.0, 1e-300) == pytest.approx(1.0)


def test_slit_forward_matches_ode_and_mpmath():
    z = 1 + 1j
    value = core.slit_forward(z, 0.0, 1.0, 0.5)
    assert abs(value - complex(mpmath.sqrt(mpmath.mpc(1, 2)))) < 1e-15
    assert abs(value - ode_forward(z, 0.0, 1.0, 0.5)) <= 1e-8


def test_slit_forward_deriv_finite_difference():
    z, h = 1 + 1j, 1e-6
    fd = (core.slit_forward(z + h, 0.0, 1.0, 0.5) - core.slit_forward(z - h, 0.0, 1.0, 0.5)) / (2 * h)
    assert abs(core.slit_forward_deriv(z, 0.0, 1.0, 0.5) - fd) <= 1e-5


def test_slit_reverse_examples():
    assert core.slit_reverse(1j * math.sqrt(3), 0.0, 1.0, 0.5) == pytest.approx(2j, abs=1e-15)
    assert core.slit_reverse(0.3 + 0.7j, 0.0, 1.0, 1e-300) == pytest.approx(0.3 + 0.7j)
    h = core.slit_reverse(1j, 1.0, 1.0, 0.3)
    # (i - 1)^2 - 0.6 = -0.6 - 2i; the principal root lies below the axis, so negate it
    assert h == pytest.approx(1 - cmath.sqrt(complex(-0.6, -2.0)), rel=1e-15)
    assert h.imag > 1.0
    assert abs(core.slit_forward(h, 1.0, 1.0, 0.3) - 1j) <= 1e-12


def test_slit_domain_errors():
    with pytest.raises(DomainError):
        core.slit_forward(0.5 + 0j, 0.5, 1.0, 0.1)
    with pytest.raises(DomainError):
        core.slit_forward(1 - 1j, 0.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        core.slit_reverse(0.1 + 0j, 0.0, 1.0, 0.5)
    with pytest.raises(ParameterError):
        core.slit_forward(1j, 0.0, 1.0, 0.0)
    with pytest.raises(ParameterError):
        core.slit_reverse(1j, 0.0, -1.0, 0.1)


def test_real_inputs_keep_their_side():
    assert core.slit_forward(2 + 0j, 0.0, 1.0, 0.5) == pytest.approx(math.sqrt(5))
    assert core.slit_forward(-2 + 0j, 0.0, 1.0, 0.5) == pytest.approx(-math.sqrt(5))
    assert core.slit_reverse(-3 + 0j, 0.0, 1.0, 0.5) == pytest.approx(-math.sqrt(8))


@settings(max_examples=300, deadline=None)
@given(x=st.floats(-4, 4), ly=st.floats(-2, 1), u=st.floats(-4, 4), a=st.floats(0.25, 4),
       ldt=st.floats(-8, -2))
def test_reverse_then_forward_roundtrip(x, ly, u, a, ldt):
    z = complex(x, 10 ** ly)
    dt = 10 ** ldt
    h = core.slit_reverse(z, u, a, dt)
    assert h.imag > z.imag
    assert abs(core.slit_forward(h, u, a, dt) - z) <= 1e-12 * abs(z)
    g = core.slit_forward(z, u, a, dt)
    # Im 0 means the point was swallowed within the step
    assert 0 <= g.imag < z.imag


def test_halfplane_point_requires_positive_im():
    with pytest.raises(DomainError):
        HalfPlanePoint(0.0, 0.0)
    assert HalfPlanePoint.of(1 + 2j).z == 1 + 2j


# ---------------------------------------------------------------- chains and flows


def test_chain_invariants():
    ch = SlitMapChain.from_steps(1.0, [DrivingStep(0.25, 0.0), DrivingStep(0.5, 1.0)])
    assert ch.time_at(ch.n_steps) == pytest.approx(0.75)
    assert ch.steps[1] == DrivingStep(0.5, 1.0)
    with pytest.raises(ParameterError):
        SlitMapChain.from_steps(1.0, [(0.0, 0.0)])
    with pytest.raises(ParameterError):
        SlitMapChain.from_steps(0.0, [(0.1, 0.0)])
    with pytest.raises(RangeError):
        core.inverse_map(ch, 1j, 3)


def test_forward_flow_tiny_and_additive():
    r = core.forward_flow(chain_const(0.0, 1.0, 1e-15, 1), 1 + 1j)
    assert r.survived and abs(r.value - (1 + 1j)) < 1e-14 and abs(r.deriv - 1) < 1e-14
    two = core.forward_flow(chain_const(0.0, 1.0, 0.5, 2), 2j)
    assert two.value == pytest.approx(core.slit_forward(2j, 0.0, 1.0, 1.0), abs=1e-15)


def test_forward_flow_hydrodynamic_normalization():
    path = sample_brownian(2.0, 1000, 2e-3, 3)
    ch = path.to_chain()
    z = 100j
    g = core.forward_flow(ch, z).value
    t = ch.time_at(ch.n_steps)
    assert abs(g - z - ch.a * t / z) <= 1e-3


def test_forward_flow_detects_swallowing():
    ch = chain_const(1.0, 1.0, 1e-4, 100)
    r = core.forward_flow(ch, 1 + 1e-3j)
    assert not r.survived
    assert r.exit_time is not None and r.exit_time <= ch.time_at(ch.n_steps)


def test_forward_flow_matches_ode_for_sine_driver():
    path = deterministic_driver("sine", 1e-4, 0.5, 2.0, amplitude=0.5, omega=3.0)
    g = core.forward_flow(path.to_chain(), 0.3 + 1j).value

    def rhs(t, y):
        w = 1.0 / complex(y[0] - 0.5 * math.sin(3.0 * t), y[1])
        return [w.real, w.imag]

    sol = solve_ivp(rhs, (0.0, 0.5), [0.3, 1.0], method="DOP853", rtol=1e-12, atol=1e-13)
    # piecewise-constant driving is first order in dt
    assert abs(g - complex(sol.y[0, -1], sol.y[1, -1])) < 1e-4


def test_inverse_map_examples():
    ch = chain_const(0.0, 1.0, 0.5, 1)
    w = core.slit_forward(2j, 0.0, 1.0, 0.5)
    assert core.inverse_map(ch, w).value == pytest.approx(2j, abs=1e-14)
    path = sample_brownian(2.0, 500, 1e-3, 11)
    f = core.inverse_map(path.to_chain(), 1j + path.values[-1])
    rev = core.reverse_flow_tip(path, path.t_max, 1j)
    assert abs(rev.value + path.values[-1] - f.value) <= 1e-9
    assert abs(rev.deriv - f.deriv) <= 1e-9


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32), x=st.floats(-2, 2), y=st.floats(0.1, 2), kappa=st.floats(0.5, 7.5))
def test_inverse_map_roundtrip(seed, x, y, kappa):
    ch = sample_brownian(kappa, 300, 1e-3, seed).to_chain()
    w = complex(x, y)
    f = core.inverse_map(ch, w)
    back = core.forward_flow(ch, f.value)
    assert back.survived
    assert abs(back.value - w) <= 1e-9 * abs(w)
    assert abs(back.deriv * f.deriv - 1) <= 1e-9


def test_shifted_inverse_deriv_examples():
    ch = chain_const(0.0, 1.0, 1.0 / 64, 64)
    assert core.shifted_inverse_deriv(ch, 0.3, 0) == 1.0
    d = core.shifted_inverse_deriv(ch, 1.0, 64)
    assert d == pytest.approx(1 / math.sqrt(3), rel=1e-13)
    h = 1e-6
    f = lambda y: core.shifted_inverse(ch, y, 64)[0]
    fd = abs((f(1.0 + h) - f(1.0 - h)) / (2j * h))
    assert abs(fd - d) <= 1e-6


def test_tip_profile_zero_steps_and_single_slit():
    ch = chain_const(0.0, 1.0, 0.5 / 32, 32)
    y = 2.0 ** -np.arange(8)
    p0 = core.tip_profile(ch, 0, y)
    assert np.all(p0.deriv_mod == 1.0)
    assert np.allclose(p0.v_cum, y, rtol=1e-12)
    p = core.tip_profile(ch, 32, y)
    s = np.sqrt(y * y + 1.0)
    assert np.allclose(p.deriv_mod, y / s, rtol=1e-12)
    assert np.allclose(p.v_cum, s - 1.0, rtol=1e-10)
    with pytest.raises(ParameterError):
        core.tip_profile(ch, 32, [0.5, 1.0])


def test_tip_profile_invariants_on_sle():
    path = sample_brownian(2.0, 2048, 1.0 / 2048, 4)
    ch = path.to_chain()
    y = 2.0 ** -np.arange(11)
    p = core.tip_profile(ch, ch.n_steps, y)
    assert np.all(np.diff(p.v_cum) < 0)
    assert np.all(p.v_cum >= y * p.deriv_mod / 2)
    js = np.arange(0, 80)
    _, d = core.shifted_inverse(ch, 2.0 ** -js, ch.n_steps)
    terms = 2.0 ** -js * np.abs(d)
    tail = np.cumsum(terms[::-1])[::-1][:11]
    assert np.all(p.v_cum >= 3 / 8 * tail) and np.all(p.v_cum <= 3 / 2 * tail)


def test_trace_point_examples():
    ch = chain_const(0.0, 1.0, 0.5 / 256, 256)
    pt, err = core.trace_point(ch, 0, 1e-3)
    assert pt == complex(0.0, 1e-3)
    y_min = core.default_y_min(ch)
    assert y_min == pytest.approx(math.sqrt(0.5 / 256) / 8)
    tip, bound = core.trace_point(ch, 256)
    assert abs(tip - 1j) <= 2 * y_min
    # for the slit the distance equals v_t(y_min) exactly
    assert abs(tip - 1j) <= bound * (1 + 1e-9)
    with pytest.raises(DomainError):
        core.trace_point(ch, 256, 0.0)


def test_trace_point_halving_within_reported_bound():
    ch = sample_brownian(4.0, 1024, 1.0 / 1024, 8).to_chain()
    p1, v1 = core.trace_point(ch, 700, 1e-3)
    p2, _ = core.trace_point(ch, 700, 5e-4)
    assert abs(p1 - p2) <= v1


def test_full_sle_trace_contained():
    path = sample_brownian(8.0 / 3.0, 4096, 1.0 / 4096, 5)
    pts = core.trace(path.to_chain())
    assert pts[0] == 0
    assert np.all(pts.imag >= 0) and np.all(np.isfinite(pts))
    exact = core.trace(chain_const(0.0, 1.0, 0.5 / 16, 16))
    assert np.allclose(exact.imag, np.sqrt(2 * np.arange(17) * 0.5 / 16), rtol=1e-12)


def test_reverse_flow_tip_examples():
    path = deterministic_driver("linear", 1e-3, 1.0, 2.0, slope=1.0)
    assert core.reverse_flow_tip(path, 0.0, 0.5 + 1j).value == 0.5 + 1j
    z = 0.2 + 0.5j
    rev = core.reverse_flow_tip(path, 1.0, z)
    fwd = core.inverse_map(path.to_chain(), z + path.values[-1])
    assert abs(rev.value - (fwd.value - path.values[-1])) <= 1e-9
    with pytest.raises(RangeError):
        core.reverse_flow_tip(path, 2.0, z)
    with pytest.raises(RangeError):
        core.reverse_flow_tip(path, 0.00015, z)


def test_forward_observables_initial_and_symmetry():
    # slit height sqrt(2t) stays below Im z = 1
    ch = chain_const(0.0, 1.0, 1e-3, 400)
    ob = core.forward_observables(ch, 1j, r=0.5, lam=1.0, xi=0.3)
    assert np.allclose(ob.X, 0.0, atol=1e-15)
    assert np.allclose(ob.Theta, math.pi / 2) and np.allclose(ob.S, 1.0)
    assert ob.Upsilon[0] == 1.0 and ob.Delta[0] == 1.0 and ob.M[0] == 1.0
    z = 0.4 + 0.7j
    ob = core.forward_observables(ch, z, r=0.5, lam=1.0, xi=0.3)
    s0 = z.imag / abs(z)
    assert ob.M[0] == pytest.approx(s0 ** -0.5 * z.imag ** 0.8, rel=1e-12)


def _polyline_dist(z, pts):
    a, b = pts[:-1], pts[1:]
    ab = b - a
    t = np.clip(((z - a) * ab.conjugate()).real / np.maximum(np.abs(ab) ** 2, 1e-300), 0, 1)
    return float(np.min(np.abs(a + t * ab - z)))


def test_forward_observables_koebe_sandwich():
    path = sample_brownian(2.0, 2000, 1e-4, 21)
    ch = path.to_chain()
    z = 0.05 + 0.1j
    ob = core.forward_observables(ch, z, 0.0, 0.0, 0.0, upsilon_stop=1e-3)
    assert np.all(np.diff(ob.Upsilon) < 0)
    assert np.all(np.diff(ob.Y) < 0)
    tips = core.trace(ch)
    for k in range(50, ob.times.size, 150):
        d = min(z.imag, _polyline_dist(z, tips[: k + 1]))
        assert ob.Upsilon[k] / 2 <= d * (1 + 1e-2) and d <= 2 * ob.Upsilon[k] * (1 + 1e-2)


def test_forward_observables_stop():
    path = sample_brownian(2.0, 4000, 1e-4, 2)
    ob = core.forward_observables(path.to_chain(), 0.02 + 0.05j, 0, 0, 0, upsilon_stop=0.03)
    assert ob.stopped_at is not None
    assert ob.Upsilon[-1] <= 0.03 < ob.Upsilon[-2]
