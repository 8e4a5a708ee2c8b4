"""Difference-equation market models, with and without memory.

All updates are synchronous: every ``k+1`` value is computed from step-``k``
(and earlier) values only.
"""

from __future__ import annotations

import numpy as np

from .continuous import MemorySpec, SimulationBlowUp, validate_memory
from .model import MarketParams, MarketState, ParameterError, Trajectory


def step_discrete(params: MarketParams, state: MarketState, dt: float) -> MarketState:
    a, b, c, d = params.a, params.b, params.c, params.d
    S, D, E, lam = state.S, state.D, state.E, state.lam
    return MarketState(
        t=state.t + dt,
        S=S + dt * (params.alpha * (lam - (a + b * S))),
        D=D + dt * (params.beta * ((c - d * D) - lam)),
        E=E + dt * (S.sum() - D.sum()),
        lam=lam + dt * (-params.k_price * E + params.h_gain * (params.lambda0 - lam)),
    )


def simulate_discrete(params: MarketParams, x0: MarketState, dt: float, n_steps: int) -> Trajectory:
    if n_steps < 0:
        raise ParameterError(f"n_steps must be >= 0, got {n_steps}")
    x0.check(params)
    X = np.empty((n_steps + 1, params.dim))
    X[0] = x0.to_vector()
    state = x0
    for k in range(n_steps):
        state = step_discrete(params, state, dt)
        row = state.to_vector()
        if not np.all(np.isfinite(row)):
            raise SimulationBlowUp(k + 1, state.t)
        X[k + 1] = row
    return Trajectory(dt=dt, t0=x0.t, X=X, m=params.m, n=params.n,
                      meta={"model": "discrete", "params": params.fingerprint()})


def simulate_discrete_memory(params: MarketParams, mem: MemorySpec, x0: MarketState,
                             n_steps: int) -> Trajectory:
    """Iterate the memory model; one step spans ``mem.lag_step``.

    The per-lag weights already carry the time scale. The imbalance sum is
    unweighted in the model, so each of its lag terms is scaled by
    ``lag_step`` (the step length). Reads before step 0 see ``x0``.
    """
    validate_memory(mem, params)
    if n_steps < 0:
        raise ParameterError(f"n_steps must be >= 0, got {n_steps}")
    x0.check(params)
    m, n, p = params.m, params.n, mem.p
    a, b, c, d = params.a, params.b, params.c, params.d
    lam0, dt = params.lambda0, mem.lag_step
    X = np.empty((n_steps + 1, params.dim))
    X[0] = x0.to_vector()
    for k in range(n_steps):
        dS = np.zeros(m)
        dD = np.zeros(n)
        dE = 0.0
        dl = 0.0
        for l in range(p + 1):
            y = X[max(k - l, 0)]
            S, D, E, lam = y[:m], y[m:m + n], y[m + n], y[m + n + 1]
            dS = dS + mem.w_alpha[l] * (lam - (a + b * S))
            dD = dD + mem.w_beta[l] * ((c - d * D) - lam)
            dE = dE + dt * (S.sum() - D.sum())
            dl = dl + (-mem.w_k[l] * E + mem.w_h[l] * (lam0 - lam))
        x = X[k]
        row = np.concatenate([x[:m] + dS, x[m:m + n] + dD, [x[m + n] + dE, x[m + n + 1] + dl]])
        if not np.all(np.isfinite(row)):
            raise SimulationBlowUp(k + 1, x0.t + (k + 1) * dt)
        X[k + 1] = row
    return Trajectory(dt=dt, t0=x0.t, X=X, m=m, n=n,
                      meta={"model": "discrete_memory", "params": params.fingerprint(), "p": p})
