import math

import numpy as np
import pytest

from loewner_lab import deterministic_driver, sample_brownian, spectra
from loewner_lab.errors import ParameterError, RangeError
from loewner_lab.harmonic import estimate_tip_harmonic_measure, slit_mu


@pytest.fixture(scope="module")
def slit_chain():
    # constant driving, a = 1, T = 1/2: the vertical slit [0, i]
    return deterministic_driver("constant", 1 / 128, 0.5, 2.0).to_chain()


def test_slit_mu_closed_form():
    # circle of radius eps about i meets the slit at i(1 - eps); g(z) = sqrt(z^2 + 1)
    assert slit_mu(1.0, 0.5) == pytest.approx(2 * math.sqrt(0.75) / math.pi)
    assert slit_mu(1.0, 1.0) == pytest.approx(2 / math.pi)
    assert slit_mu(1.0, 3.0) == 6 / math.pi


@pytest.mark.parametrize("eps", [1e-4, 1e-2, 0.3, 0.99, 1.5, 8.0])
def test_slit_oracle(slit_chain, eps):
    est = estimate_tip_harmonic_measure(slit_chain, slit_chain.n_steps, [eps])
    assert est.tip == pytest.approx(1j, abs=1e-12)
    assert est.mu[0] == pytest.approx(slit_mu(1.0, eps), rel=1e-9)
    assert est.x_minus[0] < est.v_t < est.x_plus[0]


def test_slit_small_eps_slope_is_half(slit_chain):
    est = estimate_tip_harmonic_measure(slit_chain, slit_chain.n_steps, np.geomspace(1e-6, 1e-4, 5))
    assert est.slope() == pytest.approx(0.5, abs=1e-4)


def test_mu_nondecreasing_in_eps():
    chain = sample_brownian(2.0, 512, 1 / 512, 7).to_chain()
    eps = np.geomspace(1e-3, 2.0, 12)
    est = estimate_tip_harmonic_measure(chain, chain.n_steps, eps)
    assert all(b >= a * (1 - 1e-9) for a, b in zip(est.mu, est.mu[1:]))


def test_sle_slope_band():
    # kappa = 2: mu(eps) ~ eps^(1/alpha) with the tip exponent between 1/2 and alpha_+
    alpha_plus = spectra.spectrum_params(2.0).alpha_plus
    chain = sample_brownian(2.0, 1024, 1 / 1024, 0).to_chain()
    est = estimate_tip_harmonic_measure(chain, chain.n_steps, np.geomspace(1e-3, 1e-1, 5))
    assert 0.5 - 0.1 <= est.slope() <= alpha_plus + 0.3


def test_parameter_errors(slit_chain):
    n = slit_chain.n_steps
    with pytest.raises(ParameterError):
        estimate_tip_harmonic_measure(slit_chain, 0, [0.1])
    with pytest.raises(ParameterError):
        estimate_tip_harmonic_measure(slit_chain, n, [0.0])
    with pytest.raises(ParameterError):
        estimate_tip_harmonic_measure(slit_chain, n, [0.1], circle_samples=8)
    with pytest.raises(RangeError):
        estimate_tip_harmonic_measure(slit_chain, n + 1, [0.1])


def test_as_dict_is_plain(slit_chain):
    d = estimate_tip_harmonic_measure(slit_chain, 10, [0.1]).as_dict()
    assert d["tip"][1] > 0 and isinstance(d["mu"], tuple)
