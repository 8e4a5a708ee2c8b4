import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emx import (FractionalSpec, MarketState, StepperConfig, caputo_weights, make_params,
                 simulate_fractional)
from emx.continuous import integrate
from emx.fractional import fractional_rhs, gl_integrate, read_omega_csv, validate_fractional
from emx.model import DimensionError, ParameterError


def _spec(q=1.0, **kw):
    base = dict(ord_alpha=[q], ord_beta=[q], ord_gamma=q, H_d=1.0, K_E=0.0, omega_ref=50.0)
    base.update(kw)
    return FractionalSpec(**base)


def test_weights_examples():
    np.testing.assert_array_equal(caputo_weights(1.0, 4), [1, -1, 0, 0, 0])
    np.testing.assert_allclose(caputo_weights(0.5, 2), [1, -0.5, -0.125], rtol=0, atol=1e-16)


def test_weights_range():
    with pytest.raises(ValueError):
        caputo_weights(0.0, 3)
    with pytest.raises(ValueError):
        caputo_weights(1.5, 3)


@pytest.mark.parametrize("q", [0.3, 0.5, 0.9])
def test_weight_partial_sums(q):
    N = 10_000
    w = caputo_weights(q, N)
    assert w[0] == 1 and np.all(w[1:] < 0)
    partial = np.cumsum(w)
    assert np.all(partial > 0) and np.all(np.diff(partial) < 0)
    # closed form of the partial sum: Gamma(N+1-q) / (Gamma(1-q) Gamma(N+1))
    closed = math.exp(math.lgamma(N + 1 - q) - math.lgamma(1 - q) - math.lgamma(N + 1))
    assert partial[-1] == pytest.approx(closed, rel=1e-6)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 0.999))
def test_weights_binomial(q):
    w = caputo_weights(q, 6)
    ref = [(-1) ** j * math.gamma(q + 1) / (math.gamma(j + 1) * math.gamma(q - j + 1)) for j in range(7)]
    np.testing.assert_allclose(w, ref, rtol=1e-10, atol=1e-14)


def test_order_one_is_euler_bitwise():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(3, 3))
    f = lambda t, y: A @ y + np.sin(t)
    y0 = rng.normal(size=3)
    a = gl_integrate(f, y0, 1.0, 0.01, 100)
    b = integrate(f, y0, 0.0, 0.01, 100, "euler")
    assert np.array_equal(a, b)


def test_price_decay_order_one(sloped):
    x0 = MarketState(t=0, S=[0], D=[0], E=0, lam=1.0)
    tr = simulate_fractional(sloped, _spec(1.0, K_E=3.0), x0, StepperConfig(dt=1e-3, t_end=1))
    assert abs(tr.final.lam - 0.367879441171442322) <= 2e-3


def test_order_one_matches_ode_reference():
    p = make_params(a=[1], b=[1], c=[5], d=[1], alpha=[1], beta=[2], lambda0=0)
    spec = _spec(1.0, H_d=0.5, K_E=2.0, omega_coi=49.8)

    def ode(t, x):
        # independent transcription: rates on the left, frequency-driven price law
        S, D, E, lam = x
        return np.array([(lam - 1 - S) / 1, ((5 - D) - lam) / 2, S - D, -0.5 * lam + 2 * (50 - 49.8)])

    x0 = np.array([0.5, 1.0, 0.0, 2.0])
    ref = integrate(ode, x0, 0.0, 1e-4, 50_000, "rk4")[::10]
    tr = simulate_fractional(p, spec, MarketState.from_vector(0, x0, 1, 1), StepperConfig(dt=1e-3, t_end=5))
    assert np.abs(tr.X - ref).max() <= 1e-3


def test_fixed_point_stays():
    p = make_params(a=[-10, -4], b=[1, 2], c=[36], d=[3], alpha=[1, 2], beta=[1])
    spec = FractionalSpec(ord_alpha=[0.6, 0.8], ord_beta=[0.7], ord_gamma=0.5, H_d=2.0)
    x0 = MarketState(t=0, S=[10, 2], D=[12], E=0, lam=0)
    tr = simulate_fractional(p, spec, x0, StepperConfig(dt=0.01, t_end=2))
    assert np.abs(tr.X - x0.to_vector()).max() <= 1e-12


def test_fractional_decay_monotone(sloped):
    spec = _spec(0.5, H_d=1.0)
    x0 = MarketState(t=0, S=[20], D=[20], E=0, lam=1.0)
    tr = simulate_fractional(sloped, spec, x0, StepperConfig(dt=1e-3, t_end=10))
    lam = tr.lam
    assert len(lam) == 10_001
    assert np.all(lam > 0) and np.all(np.diff(lam) <= 0)
    # slower than the integer-order exponential at late times (heavy tail)
    assert lam[-1] > math.exp(-10)


def test_truncation_error_shrinks(sloped):
    spec = _spec(0.6, H_d=1.0)
    x0 = MarketState(t=0, S=[20], D=[20], E=0, lam=1.0)
    cfg = StepperConfig(dt=1e-3, t_end=1)
    full = simulate_fractional(sloped, spec, x0, cfg).final.lam
    errs = [abs(simulate_fractional(sloped, spec, x0, cfg, memory=L).final.lam - full)
            for L in (10, 50, 250, 1000)]
    assert all(a > b for a, b in zip(errs, errs[1:]))
    assert simulate_fractional(sloped, spec, x0, cfg, memory=1001).final.lam == full


def test_omega_zero_order_hold(tmp_path):
    path = tmp_path / "w.csv"
    path.write_text("t,omega\n0,50\n1,49.8\n2,50.1\n")
    ts, ws = read_omega_csv(path)
    spec = _spec(omega_coi=(ts, ws))
    assert spec.omega_at(0.5) == 50 and spec.omega_at(1.0) == 49.8
    assert spec.omega_at(9) == 50.1 and spec.omega_at(-1) == 50
    assert _spec().omega_at(3) == 50


def test_price_rhs_uses_frequency_gain(sloped):
    spec = _spec(K_E=4.0, H_d=0.5, omega_coi=49.5)
    dx = fractional_rhs(sloped, spec)(0.0, np.array([20.0, 20.0, 7.0, 2.0]))
    assert dx[3] == pytest.approx(-0.5 * 2 + 4.0 * 0.5)


def test_validation(sloped):
    with pytest.raises(DimensionError):
        validate_fractional(FractionalSpec([1, 1], [1], 1, 1), sloped)
    with pytest.raises(ParameterError):
        validate_fractional(FractionalSpec([0.0], [1], 1, 1), sloped)
    with pytest.raises(ParameterError):
        validate_fractional(FractionalSpec([1], [1], 1, -1), sloped)
    with pytest.raises(ParameterError):
        _spec(omega_coi=(np.array([0.0, 0.0]), np.array([1.0, 2.0])))
