"""Fixed-step integration of the continuous market models.

Covers the full ODE (sloped or constant cost), the zero-imbalance variant,
the balanced descriptor model (index-reduced) and the delay variant.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import DimensionError, MarketParams, MarketState, ParameterError, Trajectory


class Method(str, enum.Enum):
    EULER = "euler"
    RK4 = "rk4"


class SimulationBlowUp(ArithmeticError):
    """A state became non-finite; usually the sign of an unstable configuration."""

    def __init__(self, step: int, t: float):
        self.step = step
        self.t = t
        super().__init__(f"non-finite state at step {step} (t = {t!r})")


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    method: Method = Method.RK4

    def __post_init__(self):
        object.__setattr__(self, "method", Method(self.method))
        if not self.dt > 0:
            raise ParameterError(f"dt must be > 0, got {self.dt!r}")
        if not self.t_end >= self.dt:
            raise ParameterError(f"t_end must be >= dt, got t_end={self.t_end!r}, dt={self.dt!r}")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def to_dict(self) -> dict:
        return {"method": self.method.value, "dt": self.dt, "t_end": self.t_end}


def _check_finite(x: np.ndarray, step: int, t: float) -> None:
    if not np.all(np.isfinite(x)):
        raise SimulationBlowUp(step, t)


def integrate(f: Callable[[float, np.ndarray], np.ndarray], x0, t0: float, dt: float,
              n_steps: int, method: Method | str = Method.RK4) -> np.ndarray:
    """Explicit fixed-step integration of ``x' = f(t, x)``; returns ``n_steps + 1`` rows."""
    method = Method(method)
    x = np.array(x0, dtype=float)
    out = np.empty((n_steps + 1, x.size))
    out[0] = x
    # overflow is detected below and reported as a blow-up
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            t = t0 + k * dt
            if method is Method.EULER:
                x = x + dt * f(t, x)
            else:
                k1 = f(t, x)
                k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
                k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
                k4 = f(t + dt, x + dt * k3)
                x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            _check_finite(x, k + 1, t0 + (k + 1) * dt)
            out[k + 1] = x
    return out


def full_rhs(params: MarketParams) -> Callable[[float, np.ndarray], np.ndarray]:
    """Vector field of the full model over the packed state ``(S, D, E, lambda)``."""
    m, n = params.m, params.n
    a, b, c, d = params.a, params.b, params.c, params.d
    al, be = params.alpha, params.beta
    k, h, lam0 = params.k_price, params.h_gain, params.lambda0

    def f(t, x):
        S, D, E, lam = x[:m], x[m:m + n], x[m + n], x[m + n + 1]
        out = np.empty_like(x)
        out[:m] = al * (lam - (a + b * S))
        out[m:m + n] = be * ((c - d * D) - lam)
        out[m + n] = S.sum() - D.sum()
        out[m + n + 1] = -k * E + h * (lam0 - lam)
        return out

    return f


def rhs_full(params: MarketParams, state: MarketState) -> MarketState:
    """Time derivative of every state component, packaged as a ``MarketState``."""
    state.check(params)
    dx = full_rhs(params)(state.t, state.to_vector())
    return MarketState.from_vector(state.t, dx, params.m, params.n)


def _trajectory(X, dt, t0, params, family, **extra) -> Trajectory:
    meta = {"model": family, "params": params.fingerprint(), **extra}
    return Trajectory(dt=dt, t0=t0, X=X, m=params.m, n=params.n, meta=meta)


def simulate_ode(params: MarketParams, x0: MarketState, cfg: StepperConfig) -> Trajectory:
    """Integrate the full model; Euler reproduces the explicit update rules exactly."""
    x0.check(params)
    X = integrate(full_rhs(params), x0.to_vector(), x0.t, cfg.dt, cfg.n_steps, cfg.method)
    return _trajectory(X, cfg.dt, x0.t, params, "continuous", method=cfg.method.value)


# ---------------------------------------------------------------------------
# balanced descriptor model


def balanced_price(params: MarketParams, S, D) -> float:
    """Price that keeps ``d/dt (1'S - 1'D) = 0``, from differentiating the balance."""
    al, be = params.alpha, params.beta
    num = np.sum(al * (params.a + params.b * S)) + np.sum(be * (params.c - params.d * D))
    return float(num / (al.sum() + be.sum()))


def simulate_dae_balanced(params: MarketParams, x0: MarketState, cfg: StepperConfig,
                          tol: float = 1e-9) -> Trajectory:
    """Integrate the balanced model with the price eliminated by index reduction.

    Each step is followed by an orthogonal projection back onto
    ``1'S = 1'D``. The price column holds the reduced price and ``E`` is
    identically zero (the imbalance is discarded in this model).
    """
    x0.check(params)
    m, n = params.m, params.n
    gap = x0.S.sum() - x0.D.sum()
    if abs(gap) > tol * max(1.0, abs(x0.S.sum())):
        raise ParameterError(f"inconsistent initial state: 1'S - 1'D = {gap!r}")
    a, b, c, d = params.a, params.b, params.c, params.d
    al, be = params.alpha, params.beta

    def f(t, y):
        S, D = y[:m], y[m:]
        lam = balanced_price(params, S, D)
        return np.concatenate([al * (lam - (a + b * S)), be * ((c - d * D) - lam)])

    y = np.concatenate([x0.S, x0.D])
    N = cfg.n_steps
    X = np.empty((N + 1, m + n + 2))
    normal = np.r_[np.ones(m), -np.ones(n)]

    def record(i, y):
        X[i, :m + n] = y
        X[i, m + n] = 0.0
        X[i, m + n + 1] = balanced_price(params, y[:m], y[m:])

    record(0, y)
    for k in range(N):
        y = integrate(f, y, x0.t + k * cfg.dt, cfg.dt, 1, cfg.method)[1]
        y = y - normal * (normal @ y) / (m + n)
        _check_finite(y, k + 1, x0.t + (k + 1) * cfg.dt)
        record(k + 1, y)
    return _trajectory(X, cfg.dt, x0.t, params, "balanced_dae", method=cfg.method.value)


# ---------------------------------------------------------------------------
# zero-imbalance model


@dataclass(frozen=True)
class ConstraintLog:
    """Balance residual ``1'S - 1'D`` per output step; logged, never enforced."""

    times: np.ndarray
    residual: np.ndarray


def simulate_zero_imbalance(params: MarketParams, x0: MarketState,
                            cfg: StepperConfig) -> tuple[Trajectory, ConstraintLog]:
    """Integrate supply/demand with a price that only relaxes to ``lambda0``.

    ``E`` is held at its initial value; the balance condition is
    overdetermined alongside these equations, so its residual is returned
    for inspection instead of being imposed.
    """
    x0.check(params)
    m, n = params.m, params.n
    a, b, c, d = params.a, params.b, params.c, params.d
    al, be = params.alpha, params.beta
    h, lam0 = params.h_gain, params.lambda0

    def f(t, x):
        S, D, lam = x[:m], x[m:m + n], x[m + n + 1]
        out = np.zeros_like(x)
        out[:m] = al * (lam - (a + b * S))
        out[m:m + n] = be * ((c - d * D) - lam)
        out[m + n + 1] = h * (lam0 - lam)
        return out

    X = integrate(f, x0.to_vector(), x0.t, cfg.dt, cfg.n_steps, cfg.method)
    traj = _trajectory(X, cfg.dt, x0.t, params, "zero_imbalance", method=cfg.method.value)
    log = ConstraintLog(traj.times, X[:, :m].sum(axis=1) - X[:, m:m + n].sum(axis=1))
    return traj, log


# ---------------------------------------------------------------------------
# delay model


@dataclass(frozen=True, eq=False)
class MemorySpec:
    """Per-lag weights shared by the discrete-memory and delay models.

    Row ``l`` of ``w_alpha``/``w_beta`` weighs the producer/consumer
    response to the state ``l`` lags back. ``w_k`` and ``w_h`` default to
    the plain ``k`` and ``h`` at every lag.
    """

    p: int
    lag_step: float
    w_alpha: np.ndarray
    w_beta: np.ndarray
    w_k: np.ndarray
    w_h: np.ndarray

    def __post_init__(self):
        for name in ("w_alpha", "w_beta"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=2)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("w_k", "w_h"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "lag_step", float(self.lag_step))

    @classmethod
    def build(cls, params: MarketParams, p: int, lag_step: float, w_alpha, w_beta,
              w_k=None, w_h=None) -> MemorySpec:
        w_k = np.full(p + 1, params.k_price) if w_k is None else w_k
        w_h = np.full(p + 1, params.h_gain) if w_h is None else w_h
        return validate_memory(cls(p, lag_step, w_alpha, w_beta, w_k, w_h), params)

    def to_dict(self) -> dict:
        return {"p": self.p, "lag_step": self.lag_step,
                "w_alpha": self.w_alpha.tolist(), "w_beta": self.w_beta.tolist(),
                "w_k": self.w_k.tolist(), "w_h": self.w_h.tolist()}

    def __eq__(self, other):
        if not isinstance(other, MemorySpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def validate_memory(mem: MemorySpec, params: MarketParams) -> MemorySpec:
    if int(mem.p) != mem.p or mem.p < 0:
        raise ParameterError(f"memory length p must be a non-negative integer, got {mem.p!r}")
    if not mem.lag_step > 0:
        raise ParameterError(f"lag_step must be > 0, got {mem.lag_step!r}")
    q = mem.p + 1
    for name, shape in (("w_alpha", (q, params.m)), ("w_beta", (q, params.n)),
                        ("w_k", (q,)), ("w_h", (q,))):
        if getattr(mem, name).shape != shape:
            raise DimensionError(name, shape, getattr(mem, name).shape)
        if not np.all(np.isfinite(getattr(mem, name))):
            raise ParameterError(f"{name} contains non-finite weights")
    return mem


@dataclass(frozen=True, eq=False)
class HistoryBuffer:
    """Pre-history samples at ``t0 - p*lag_step, ..., t0`` (oldest first).

    Reads between samples interpolate linearly; the last row is the initial
    state of the run.
    """

    lag_step: float
    t0: float
    samples: np.ndarray

    @property
    def depth(self) -> int:
        return self.samples.shape[0]

    @classmethod
    def constant(cls, x0: MarketState, mem: MemorySpec) -> HistoryBuffer:
        rows = np.tile(x0.to_vector(), (mem.p + 1, 1))
        return cls(mem.lag_step, x0.t, rows)

    def read(self, t: float) -> np.ndarray:
        times = self.t0 - self.lag_step * np.arange(self.depth - 1, -1, -1)
        if self.depth == 1:
            return self.samples[0].copy()
        return np.array([np.interp(t, times, col) for col in self.samples.T])


def _delay_rhs(params: MarketParams, mem: MemorySpec):
    m, n = params.m, params.n
    a, b, c, d = params.a, params.b, params.c, params.d
    lam0 = params.lambda0

    def f(x, lagged):
        # lagged[l] is the state l lags back; lagged[0] is x itself
        out = np.empty_like(x)
        dS = np.zeros(m)
        dD = np.zeros(n)
        dl = 0.0
        for l, y in enumerate(lagged):
            S, D, E, lam = y[:m], y[m:m + n], y[m + n], y[m + n + 1]
            dS = dS + mem.w_alpha[l] * (lam - (a + b * S))
            dD = dD + mem.w_beta[l] * ((c - d * D) - lam)
            dl = dl + (-mem.w_k[l] * E + mem.w_h[l] * (lam0 - lam))
        out[:m] = dS
        out[m:m + n] = dD
        out[m + n] = x[:m].sum() - x[m:m + n].sum()
        out[m + n + 1] = dl
        return out

    return f


def simulate_delay(params: MarketParams, mem: MemorySpec, history: HistoryBuffer,
                   cfg: StepperConfig) -> Trajectory:
    """Integrate the delay model with lagged reads at exact multiples of ``lag_step``.

    ``dt`` must divide ``lag_step``. Euler reads only grid points. RK4 also
    needs half-step values, taken from the cubic Hermite interpolant of the
    stored states and derivatives (or from the history buffer before
    ``t0``).
    """
    validate_memory(mem, params)
    if history.depth != mem.p + 1 or history.samples.shape[1] != params.dim:
        raise ParameterError(
            f"history must hold {mem.p + 1} samples of dimension {params.dim}, "
            f"got {history.samples.shape}")
    if not np.all(np.isfinite(history.samples)):
        raise ParameterError("history buffer is not fully populated")
    if abs(history.lag_step - mem.lag_step) > 1e-12 * mem.lag_step:
        raise ParameterError("history lag_step does not match the memory spec")
    ratio = mem.lag_step / cfg.dt
    r = int(round(ratio))
    if r < 1 or abs(ratio - r) > 1e-9 * ratio:
        raise ParameterError(f"dt = {cfg.dt!r} does not divide lag_step = {mem.lag_step!r}")

    f = _delay_rhs(params, mem)
    dt, t0, N = cfg.dt, history.t0, cfg.n_steps
    X = np.empty((N + 1, params.dim))
    F = np.empty((N + 1, params.dim))
    X[0] = history.samples[-1]

    def read(q: int) -> np.ndarray:
        # q counts half steps from t0
        if q < 0:
            return history.read(t0 + 0.5 * q * dt)
        if q % 2 == 0:
            return X[q // 2]
        j = (q - 1) // 2
        return 0.5 * (X[j] + X[j + 1]) + (dt / 8.0) * (F[j] - F[j + 1])

    def lags(k: int, half: int, x: np.ndarray) -> list:
        return [x] + [read(2 * k + half - 2 * l * r) for l in range(1, mem.p + 1)]

    for k in range(N):
        x = X[k]
        k1 = f(x, lags(k, 0, x))
        F[k] = k1
        if cfg.method is Method.EULER:
            xn = x + dt * k1
        else:
            x2 = x + 0.5 * dt * k1
            k2 = f(x2, lags(k, 1, x2))
            x3 = x + 0.5 * dt * k2
            k3 = f(x3, lags(k, 1, x3))
            x4 = x + dt * k3
            k4 = f(x4, lags(k, 2, x4))
            xn = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(xn, k + 1, t0 + (k + 1) * dt)
        X[k + 1] = xn
    return _trajectory(X, dt, t0, params, "delay", method=cfg.method.value, p=mem.p)
