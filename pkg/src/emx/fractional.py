"""Caputo fractional-order market model on a Grunwald-Letnikov grid."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .continuous import SimulationBlowUp, StepperConfig
from .model import DimensionError, MarketParams, MarketState, ParameterError, Trajectory


def caputo_weights(order: float, n_steps: int) -> np.ndarray:
    """Grunwald-Letnikov coefficients ``w_j = (-1)^j binom(order, j)``, ``j = 0..n_steps``."""
    if not 0 < order <= 1:
        raise ValueError(f"fractional order must lie in (0, 1], got {order!r}")
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    w = np.empty(n_steps + 1)
    w[0] = 1.0
    for j in range(1, n_steps + 1):
        w[j] = w[j - 1] * (1.0 - (order + 1.0) / j)
    return w


def gl_integrate(f: Callable[[float, np.ndarray], np.ndarray], y0, orders, dt: float,
                 n_steps: int, t0: float = 0.0, memory: int | None = None) -> np.ndarray:
    """Explicit Grunwald-Letnikov scheme for ``D^q y = f(t, y)`` (Caputo sense).

    Iterates on ``y - y0`` so the initial value anchors the Caputo operator::

        y[k+1] = dt^q f(t_k, y_k) - sum_{j=1}^{L} w_j y[k+1-j] + y0 * sum_{j=0}^{L} w_j

    with ``L = k + 1`` (or ``memory`` when truncating). At order 1 the
    weights are ``[1, -1, 0, ...]`` and this is explicit Euler bit for bit.
    """
    y0 = np.array(y0, dtype=float, ndmin=1)
    orders = np.broadcast_to(np.asarray(orders, dtype=float), y0.shape)
    if memory is not None and memory < 1:
        raise ValueError("memory must be >= 1 when given")
    uniq = {q: caputo_weights(q, n_steps + 1) for q in np.unique(orders)}
    W = np.column_stack([uniq[q] for q in orders])
    Wsum = np.cumsum(W, axis=0)
    hq = dt ** orders
    Y = np.empty((n_steps + 1, y0.size))
    Y[0] = y0
    for k in range(n_steps):
        L = k + 1 if memory is None else min(k + 1, memory)
        fk = f(t0 + k * dt, Y[k])
        hist = np.sum(W[1:L + 1] * Y[k::-1][:L], axis=0)
        y = hq * fk - hist + y0 * Wsum[L]
        if not np.all(np.isfinite(y)):
            raise SimulationBlowUp(k + 1, t0 + (k + 1) * dt)
        Y[k + 1] = y
    return Y


@dataclass(frozen=True, eq=False)
class FractionalSpec:
    """Caputo orders and the frequency-control price law.

    ``omega_coi`` is either a constant or a ``(times, values)`` pair sampled
    with a zero-order hold.
    """

    ord_alpha: np.ndarray
    ord_beta: np.ndarray
    ord_gamma: float
    H_d: float
    K_E: float = 0.0
    omega_ref: float = 0.0
    omega_coi: float | tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self):
        for name in ("ord_alpha", "ord_beta"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        for name in ("ord_gamma", "H_d", "K_E", "omega_ref"):
            object.__setattr__(self, name, float(getattr(self, name)))
        w = self.omega_coi
        if w is None:
            object.__setattr__(self, "omega_coi", self.omega_ref)
        elif isinstance(w, tuple):
            ts, vs = (np.array(v, dtype=float) for v in w)
            if ts.shape != vs.shape or ts.ndim != 1 or ts.size == 0:
                raise ParameterError("omega_coi samples need matching non-empty time/value columns")
            if np.any(np.diff(ts) <= 0):
                raise ParameterError("omega_coi sample times must be strictly increasing")
            object.__setattr__(self, "omega_coi", (ts, vs))
        else:
            object.__setattr__(self, "omega_coi", float(w))

    def omega_at(self, t: float) -> float:
        w = self.omega_coi
        if not isinstance(w, tuple):
            return w
        ts, vs = w
        i = int(np.searchsorted(ts, t, side="right")) - 1
        return float(vs[max(i, 0)])

    def to_dict(self) -> dict:
        w = self.omega_coi
        if isinstance(w, tuple):
            w = {"t": w[0].tolist(), "omega": w[1].tolist()}
        return {"ord_alpha": self.ord_alpha.tolist(), "ord_beta": self.ord_beta.tolist(),
                "ord_gamma": self.ord_gamma, "H_d": self.H_d, "K_E": self.K_E,
                "omega_ref": self.omega_ref, "omega_coi": w}

    def __eq__(self, other):
        if not isinstance(other, FractionalSpec):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def read_omega_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column ``t,omega`` CSV; a non-numeric first row is taken as a header."""
    rows = []
    with open(Path(path), newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if not row:
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if i == 0:
                    continue
                raise ParameterError(f"{path}:{i + 1}: expected two numeric columns") from None
    data = np.array(rows, dtype=float).reshape(-1, 2)
    return data[:, 0], data[:, 1]


def validate_fractional(spec: FractionalSpec, params: MarketParams) -> FractionalSpec:
    if spec.ord_alpha.shape != (params.m,):
        raise DimensionError("ord_alpha", params.m, spec.ord_alpha.shape)
    if spec.ord_beta.shape != (params.n,):
        raise DimensionError("ord_beta", params.n, spec.ord_beta.shape)
    orders = np.r_[spec.ord_alpha, spec.ord_beta, spec.ord_gamma]
    if np.any(orders <= 0) or np.any(orders > 1):
        raise ParameterError("fractional orders must lie in (0, 1]")
    if spec.H_d < 0:
        raise ParameterError(f"H_d must be >= 0, got {spec.H_d!r}")
    return spec


def fractional_rhs(params: MarketParams, spec: FractionalSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """Right-hand sides of the fractional model over ``(S, D, E, lambda)``.

    The response rates sit on the left of the Caputo operator, so
    ``D^q S_i = (lambda - a_i - b_i S_i) / alpha_i``. The price is driven by
    ``-H_d lambda + K_E (omega_ref - omega_coi(t))``.
    """
    m, n = params.m, params.n
    a, b, c, d = params.a, params.b, params.c, params.d
    al, be = params.alpha, params.beta

    def f(t, x):
        S, D, lam = x[:m], x[m:m + n], x[m + n + 1]
        out = np.empty_like(x)
        out[:m] = (lam - (a + b * S)) / al
        out[m:m + n] = ((c - d * D) - lam) / be
        out[m + n] = S.sum() - D.sum()
        out[m + n + 1] = -spec.H_d * lam + spec.K_E * (spec.omega_ref - spec.omega_at(t))
        return out

    return f


def simulate_fractional(params: MarketParams, spec: FractionalSpec, x0: MarketState,
                        cfg: StepperConfig, memory: int | None = None) -> Trajectory:
    """Integrate the fractional model; ``E`` keeps order 1 (plain Euler)."""
    validate_fractional(spec, params)
    x0.check(params)
    orders = np.r_[spec.ord_alpha, spec.ord_beta, 1.0, spec.ord_gamma]
    X = gl_integrate(fractional_rhs(params, spec), x0.to_vector(), orders, cfg.dt,
                     cfg.n_steps, t0=x0.t, memory=memory)
    return Trajectory(dt=cfg.dt, t0=x0.t, X=X, m=params.m, n=params.n,
                      meta={"model": "fractional", "params": params.fingerprint(),
                            "memory": memory})
