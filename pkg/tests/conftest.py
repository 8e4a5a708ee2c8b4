import pytest

from emx import MarketState, make_params


@pytest.fixture
def sloped():
    """Single producer/consumer with linear curves; equilibrium price 30."""
    return make_params(a=[10], b=[1], c=[50], d=[1], alpha=[1], beta=[1],
                       k_price=1, h_gain=1, lambda0=30)


@pytest.fixture
def sloped_stable():
    """Same curves, gains chosen so every mode of the linearisation decays."""
    return make_params(a=[10], b=[1], c=[50], d=[1], alpha=[1], beta=[1],
                       k_price=0.5, h_gain=3, lambda0=30)


@pytest.fixture
def sloped_eq():
    return MarketState(t=0.0, S=[20.0], D=[20.0], E=0.0, lam=30.0)


def random_sloped(rng, m=None, n=None):
    m = m or int(rng.integers(1, 6))
    n = n or int(rng.integers(1, 6))
    a = rng.uniform(0, 50, m)
    c = rng.uniform(a.max(), 100, n)
    return make_params(a=a, b=rng.uniform(0.1, 10, m), c=c, d=rng.uniform(0.1, 10, n),
                       alpha=rng.uniform(0.2, 2, m), beta=rng.uniform(0.2, 2, n),
                       k_price=rng.uniform(0.1, 2), h_gain=rng.uniform(0.1, 2),
                       lambda0=rng.uniform(0, 100))


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
