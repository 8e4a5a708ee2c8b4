"""Merit-order dispatch: minimum-cost supply and welfare-maximising clearing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ParameterError

BALANCE_TOL = 1e-9


class InfeasibleDispatch(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DispatchProblem:
    costs: np.ndarray
    s_min: np.ndarray
    s_max: np.ndarray
    benefits: np.ndarray
    d_min: np.ndarray
    d_max: np.ndarray
    total_demand: float | None = None

    def __post_init__(self):
        for name in ("costs", "s_min", "s_max", "benefits", "d_min", "d_max"):
            arr = np.array(getattr(self, name), dtype=float, ndmin=1)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        m, n = self.costs.size, self.benefits.size
        for name, size in (("s_min", m), ("s_max", m), ("d_min", n), ("d_max", n)):
            if getattr(self, name).shape != (size,):
                raise ParameterError(f"{name}: expected length {size}, got {getattr(self, name).size}")
        for name in ("costs", "s_min", "s_max", "benefits", "d_min", "d_max"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParameterError(f"{name} must be finite")
        if np.any(self.s_min > self.s_max):
            raise ParameterError(f"generation bounds out of order at {np.flatnonzero(self.s_min > self.s_max).tolist()}")
        if np.any(self.d_min > self.d_max):
            raise ParameterError(f"demand bounds out of order at {np.flatnonzero(self.d_min > self.d_max).tolist()}")
        if self.total_demand is not None:
            object.__setattr__(self, "total_demand", float(self.total_demand))

    @property
    def m(self) -> int:
        return self.costs.size

    @property
    def n(self) -> int:
        return self.benefits.size

    @classmethod
    def from_dict(cls, raw: dict) -> DispatchProblem:
        prod, cons = raw.get("producers", []), raw.get("consumers", [])
        return cls(
            costs=[p["cost"] for p in prod], s_min=[p.get("min", 0.0) for p in prod],
            s_max=[p["max"] for p in prod],
            benefits=[c["benefit"] for c in cons], d_min=[c.get("min", 0.0) for c in cons],
            d_max=[c["max"] for c in cons],
            total_demand=raw.get("total_demand"),
        )

    def to_dict(self) -> dict:
        return {
            "producers": [{"cost": c, "min": lo, "max": hi} for c, lo, hi in
                          zip(self.costs.tolist(), self.s_min.tolist(), self.s_max.tolist())],
            "consumers": [{"benefit": b, "min": lo, "max": hi} for b, lo, hi in
                          zip(self.benefits.tolist(), self.d_min.tolist(), self.d_max.tolist())],
            "total_demand": self.total_demand,
        }

    def __eq__(self, other):
        if not isinstance(other, DispatchProblem):
            return NotImplemented
        return self.to_dict() == other.to_dict()


@dataclass(frozen=True)
class DispatchResult:
    S: np.ndarray
    D: np.ndarray
    objective: float
    price_range: tuple[float, float] | None

    def to_dict(self) -> dict:
        return {"S": self.S.tolist(), "D": self.D.tolist(), "objective": self.objective,
                "price_range": None if self.price_range is None else list(self.price_range)}


def social_welfare(problem: DispatchProblem, S, D) -> float:
    S, D = np.asarray(S, dtype=float), np.asarray(D, dtype=float)
    if S.shape != (problem.m,) or D.shape != (problem.n,):
        raise ParameterError("dispatch vectors do not match the problem dimensions")
    return float(problem.benefits @ D - problem.costs @ S)


def _fill(order: np.ndarray, lo: np.ndarray, hi: np.ndarray, amount: float) -> np.ndarray:
    """Raise units from ``lo`` toward ``hi`` in ``order`` until ``amount`` is placed."""
    x = lo.copy()
    for i in order:
        if amount <= 0:
            break
        take = min(hi[i] - lo[i], amount)
        x[i] += take
        amount -= take
    return x


def _merit(values: np.ndarray, descending: bool = False) -> np.ndarray:
    # stable sort keeps input order on ties
    return np.argsort(-values if descending else values, kind="stable")


def min_cost_dispatch(problem: DispatchProblem, total_demand: float | None = None) -> DispatchResult:
    """Cheapest generation meeting a fixed total demand.

    Producers are raised from their minimum in ascending cost order. ``D``
    is the single aggregate load and the price range collapses to the cost
    of the marginal producer.
    """
    demand = problem.total_demand if total_demand is None else float(total_demand)
    if demand is None:
        raise ParameterError("min_cost_dispatch needs a total demand")
    lo, hi = problem.s_min.sum(), problem.s_max.sum()
    if not lo - BALANCE_TOL <= demand <= hi + BALANCE_TOL:
        raise InfeasibleDispatch(f"demand {demand!r} outside generation range [{lo!r}, {hi!r}]")
    order = _merit(problem.costs)
    S = _fill(order, problem.s_min, problem.s_max, demand - lo)
    raised = np.flatnonzero(S > problem.s_min)
    price = None
    if raised.size:
        marginal = float(problem.costs[raised].max())
        price = (marginal, marginal)
    return DispatchResult(S, np.array([demand]), float(problem.costs @ S), price)


def clear_market(problem: DispatchProblem) -> DispatchResult:
    """Welfare-maximising clearing under power balance and box limits.

    Both sides first reach the smallest feasible traded volume by merit
    order, then the cheapest remaining supply is matched with the most
    valuable remaining demand while benefit >= cost. Welfare is concave in
    traded volume, so this sweep lands on an exact optimum of the LP.
    """
    q_lo = max(problem.s_min.sum(), problem.d_min.sum())
    q_hi = min(problem.s_max.sum(), problem.d_max.sum())
    if q_lo > q_hi + BALANCE_TOL:
        raise InfeasibleDispatch(f"no balanced dispatch: volume range [{q_lo!r}, {q_hi!r}] is empty")
    s_order = _merit(problem.costs)
    d_order = _merit(problem.benefits, descending=True)
    S = _fill(s_order, problem.s_min, problem.s_max, q_lo - problem.s_min.sum())
    D = _fill(d_order, problem.d_min, problem.d_max, q_lo - problem.d_min.sum())

    si = di = 0
    while si < problem.m and di < problem.n:
        i, j = s_order[si], d_order[di]
        room_s = problem.s_max[i] - S[i]
        room_d = problem.d_max[j] - D[j]
        if room_s <= 0:
            si += 1
            continue
        if room_d <= 0:
            di += 1
            continue
        if problem.benefits[j] < problem.costs[i]:
            break
        q = min(room_s, room_d)
        S[i] += q
        D[j] += q

    raised_s = np.flatnonzero(S > problem.s_min)
    raised_d = np.flatnonzero(D > problem.d_min)
    if raised_s.size and raised_d.size:
        price = (float(problem.costs[raised_s].max()), float(problem.benefits[raised_d].min()))
    elif problem.m and problem.n:
        # nothing traded above the minimums: any price between the best bid and best offer
        lo_b, hi_c = float(problem.benefits.max()), float(problem.costs.min())
        price = (min(lo_b, hi_c), max(lo_b, hi_c))
    else:
        price = None
    return DispatchResult(S, D, social_welfare(problem, S, D), price)
