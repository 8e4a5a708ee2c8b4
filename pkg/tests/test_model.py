import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from emx import (DimensionError, MarketParams, MarketState, SignError, Variant,
                 assemble_linear_system, make_params)
from emx.continuous import full_rhs
from emx.model import marginal_benefit, marginal_cost, params_from_dict, validate_params

from conftest import random_sloped


def test_valid_params_accepted(sloped):
    assert validate_params(sloped) is sloped
    assert sloped.m == sloped.n == 1
    assert sloped.dim == 4


def test_negative_alpha_rejected_with_index():
    with pytest.raises(SignError) as err:
        make_params(a=[10], b=[1], c=[50], d=[1], alpha=[-1], beta=[1])
    assert "alpha" in str(err.value)
    assert err.value.index == 0


def test_length_mismatch_names_field():
    raw = dict(m=1, n=1, a=[1, 2], b=[1], c=[50], d=[1], alpha=[1], beta=[1])
    with pytest.raises(DimensionError) as err:
        params_from_dict(raw)
    assert err.value.field == "a"


@pytest.mark.parametrize("field,value", [("b", [-1.0]), ("d", [-0.5]), ("beta", [0.0])])
def test_sign_rules(field, value):
    kw = dict(a=[10], b=[1], c=[50], d=[1], alpha=[1], beta=[1])
    kw[field] = value
    with pytest.raises(SignError):
        make_params(**kw)


@pytest.mark.parametrize("gain", ["k_price", "h_gain"])
def test_negative_gains_rejected(gain):
    with pytest.raises(SignError):
        make_params(a=[10], b=[1], c=[50], d=[1], alpha=[1], beta=[1], **{gain: -1})


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        make_params(a=[np.nan], b=[1], c=[50], d=[1], alpha=[1], beta=[1])


def test_params_immutable(sloped):
    with pytest.raises(ValueError):
        sloped.a[0] = 3.0


def test_marginal_curves():
    p = make_params(a=[10], b=[1], c=[50], d=[1], alpha=[1], beta=[1])
    assert marginal_cost(p, [5]).tolist() == [15]
    assert marginal_benefit(p, [22]).tolist() == [28]
    flat = make_params(a=[10], b=[0], c=[50], d=[0], alpha=[1], beta=[1])
    assert marginal_cost(flat, [999]).tolist() == [10]
    assert marginal_benefit(flat, [7]).tolist() == [50]
    p2 = make_params(a=[10], b=[1], c=[50], d=[2], alpha=[1], beta=[1])
    assert marginal_benefit(p2, [0]).tolist() == [50]


def test_marginal_cost_two_producers_meets_price():
    p = make_params(a=[10, 20], b=[1, 2], c=[50], d=[1], alpha=[1, 1], beta=[1])
    assert marginal_cost(p, [18, 4]).tolist() == [28, 28]


def test_marginal_cost_dimension_check(sloped):
    with pytest.raises(DimensionError):
        marginal_cost(sloped, [1, 2])


def test_balanced_dae_matrices():
    p = make_params(a=[10], b=[0], c=[50], d=[0], alpha=[2], beta=[3])
    sys = assemble_linear_system(p, Variant.BALANCED_DAE)
    np.testing.assert_array_equal(sys.E_mat, np.diag([1.0, 1.0, 0.0]))
    np.testing.assert_array_equal(sys.A_mat, [[0, 0, 2], [0, 0, -3], [1, -1, 0]])
    np.testing.assert_array_equal(sys.B_vec, [-20, 150, 0])
    assert sys.labels == ("S_1", "D_1", "lambda")
    assert np.linalg.matrix_rank(sys.E_mat) == 2


def test_full_constant_matrix():
    p = make_params(a=[10], b=[3], c=[50], d=[4], alpha=[2], beta=[5], k_price=7, h_gain=11)
    sys = assemble_linear_system(p, Variant.FULL_CONSTANT)
    np.testing.assert_array_equal(sys.A_mat, [[0, 0, 0, 2], [0, 0, 0, -5], [1, -1, 0, 0], [0, 0, -7, -11]])
    np.testing.assert_array_equal(sys.E_mat, np.eye(4))


def test_full_sloped_matrix(sloped):
    sys = assemble_linear_system(sloped, Variant.FULL_SLOPED)
    np.testing.assert_array_equal(sys.A_mat, [[-1, 0, 0, 1], [0, -1, 0, -1], [1, -1, 0, 0], [0, 0, -1, -1]])
    assert sys.labels == ("S_1", "D_1", "E", "lambda")


def test_unknown_variant(sloped):
    with pytest.raises(ValueError):
        assemble_linear_system(sloped, "FullBogus")


def _fd_jacobian(f, x, h=1e-5):
    J = np.empty((x.size, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        J[:, i] = (f(0.0, x + e) - f(0.0, x - e)) / (2 * h)
    return J


@pytest.mark.parametrize("seed", range(5))
def test_sloped_jacobian_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    p = random_sloped(rng)
    x = rng.normal(size=p.dim) * 10
    sys = assemble_linear_system(p, Variant.FULL_SLOPED)
    np.testing.assert_allclose(sys.A_mat, _fd_jacobian(full_rhs(p), x), atol=1e-6)


@pytest.mark.parametrize("seed", range(5))
def test_affine_form_reproduces_rhs(seed):
    rng = np.random.default_rng(100 + seed)
    p = random_sloped(rng)
    x = rng.normal(size=p.dim) * 10
    sys = assemble_linear_system(p, Variant.FULL_SLOPED)
    np.testing.assert_allclose(sys.rhs(x), full_rhs(p)(0.0, x), rtol=0, atol=1e-12 * (1 + np.abs(x).max()) * 100)


def test_constant_cost_affine_form():
    p = make_params(a=[10, 12], b=[0, 0], c=[40], d=[0], alpha=[1, 2], beta=[3],
                    k_price=0.5, h_gain=2, lambda0=25)
    sys = assemble_linear_system(p, Variant.FULL_CONSTANT)
    x = np.array([1.0, 2.0, 3.0, 0.5, 27.0])
    np.testing.assert_allclose(sys.rhs(x), full_rhs(p)(0.0, x), atol=1e-12)


def test_balanced_dae_affine_form_with_price():
    p = make_params(a=[10], b=[1], c=[50], d=[2], alpha=[2], beta=[3])
    sys = assemble_linear_system(p, Variant.BALANCED_DAE)
    S, D, lam = 4.0, 5.0, 31.0
    expect = [2 * (lam - 10 - 4), 3 * (50 - 2 * 5 - lam), S - D]
    np.testing.assert_allclose(sys.A_mat @ [S, D, lam] + sys.B_vec, expect, atol=1e-12)


def test_state_round_trip():
    s = MarketState(t=1.5, S=[1, 2], D=[3], E=0.25, lam=31)
    assert MarketState.from_dict(s.to_dict()) == s
    x = s.to_vector()
    assert MarketState.from_vector(1.5, x, 2, 1) == s


def test_state_dimension_check(sloped):
    with pytest.raises(DimensionError):
        MarketState(t=0, S=[1, 2], D=[1], E=0, lam=0).check(sloped)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 10), min_size=1, max_size=4),
       st.lists(st.floats(0.1, 10), min_size=1, max_size=4))
def test_params_dict_round_trip(b, d):
    p = make_params(a=[1.0] * len(b), b=b, c=[60.0] * len(d), d=d,
                    alpha=[1.0] * len(b), beta=[2.0] * len(d), lambda0=3)
    q = params_from_dict(p.to_dict())
    assert q == p
    assert q.fingerprint() == p.fingerprint()
    assert isinstance(q, MarketParams)
