"""Market equilibria: closed form for sloped curves and rank-revealing solves."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .model import (
    DimensionError,
    LinearSystem,
    MarketParams,
    MarketState,
    Variant,
    assemble_linear_system,
)

RANK_RTOL = 1e-10


class Status(str, enum.Enum):
    UNIQUE = "Unique"
    INCONSISTENT = "Inconsistent"
    UNDERDETERMINED = "Underdetermined"


class EquilibriumError(ValueError):
    pass


@dataclass(frozen=True)
class EquilibriumResult:
    state: MarketState
    residual_norm: float
    status: Status
    x: np.ndarray

    def to_dict(self) -> dict:
        return {"status": self.status.value, "residual_norm": self.residual_norm,
                **self.state.to_dict()}


def residual(sys: LinearSystem, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.dim,):
        raise DimensionError("x", sys.dim, x.shape)
    return float(np.linalg.norm(sys.A_mat @ x + sys.B_vec))


def _state_from_labels(labels, x) -> MarketState:
    S = [v for lab, v in zip(labels, x) if lab.startswith("S_")]
    D = [v for lab, v in zip(labels, x) if lab.startswith("D_")]
    values = dict(zip(labels, x))
    return MarketState(t=0.0, S=S, D=D, E=values.get("E", 0.0), lam=values["lambda"])


def equilibrium_solve(sys: LinearSystem, rtol: float = RANK_RTOL) -> EquilibriumResult:
    """Solve ``A x* + B = 0`` through an SVD.

    Rank is decided at ``rtol`` times the largest singular value. A
    rank-deficient system returns the minimum-norm least-squares point and is
    reported ``Underdetermined`` when that point is an exact solution and
    ``Inconsistent`` otherwise.
    """
    A, B = sys.A_mat, sys.B_vec
    U, sv, Vt = np.linalg.svd(A)
    cutoff = rtol * (sv[0] if sv.size and sv[0] > 0 else 1.0)
    rank = int(np.sum(sv > cutoff))
    rhs = U.T @ (-B)
    coef = np.zeros_like(sv)
    coef[:rank] = rhs[:rank] / sv[:rank]
    x = Vt.T @ coef
    if rank == A.shape[0]:
        # refine with a direct solve; the SVD path above is only for the rank decision
        x = np.linalg.solve(A, -B)
    res = residual(sys, x)
    if rank == A.shape[0]:
        status = Status.UNIQUE
    elif res <= 1e-9 * (1.0 + np.linalg.norm(B)):
        status = Status.UNDERDETERMINED
    else:
        status = Status.INCONSISTENT
    return EquilibriumResult(_state_from_labels(sys.labels, x), res, status, x)


def equilibrium_sloped(params: MarketParams) -> EquilibriumResult:
    """Closed-form equilibrium for strictly sloped cost and benefit curves.

    The price equalises every marginal cost and benefit and clears the
    market. The imbalance settles where the price law is stationary,
    ``E* = h (lambda0 - lambda*) / k``, which is zero whenever the reference
    price already clears the market (or ``k = 0``).
    """
    if np.any(params.b <= 0) or np.any(params.d <= 0):
        raise EquilibriumError(
            "equilibrium_sloped needs b_i > 0 and d_j > 0; "
            "use equilibrium_solve on an assembled system instead")
    a, b, c, d = params.a, params.b, params.c, params.d
    lam = (np.sum(a / b) + np.sum(c / d)) / (np.sum(1.0 / b) + np.sum(1.0 / d))
    S = (lam - a) / b
    D = (c - lam) / d
    E = params.h_gain * (params.lambda0 - lam) / params.k_price if params.k_price > 0 else 0.0
    x = np.concatenate([S, D, [E, lam]])
    sys = assemble_linear_system(params, Variant.FULL_SLOPED)
    state = MarketState(t=0.0, S=S, D=D, E=E, lam=lam)
    return EquilibriumResult(state, residual(sys, x), Status.UNIQUE, x)


def model_equilibrium(params: MarketParams, variant: Variant | str = Variant.FULL_SLOPED) -> EquilibriumResult:
    """Equilibrium of the assembled ``variant``, preferring the closed form when it applies."""
    variant = Variant(variant)
    if variant is Variant.FULL_SLOPED and params.k_price > 0 \
            and np.all(params.b > 0) and np.all(params.d > 0):
        return equilibrium_sloped(params)
    return equilibrium_solve(assemble_linear_system(params, variant))
