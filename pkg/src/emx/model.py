"""Market parameters, states and the linear-system assembly shared by every model.

Variable ordering is fixed everywhere as ``(S_1..S_m, D_1..D_n, E, lambda)``;
the balanced (algebraic) variant drops ``E``.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

import numpy as np


class ParameterError(ValueError):
    """Raised when market parameters violate a shape or sign rule."""


class DimensionError(ParameterError):
    def __init__(self, name: str, expected: int | tuple, got: int | tuple):
        self.field = name
        super().__init__(f"{name}: expected length/shape {expected}, got {got}")


class SignError(ParameterError):
    def __init__(self, name: str, index: int | None, bound: str, value: float):
        self.field = name
        self.index = index
        where = name if index is None else f"{name}[{index}]"
        super().__init__(f"{where} = {value!r} violates {bound}")


def _frozen(x, ndim: int = 1) -> np.ndarray:
    arr = np.array(x, dtype=float, ndmin=ndim)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MarketParams:
    """Producer, consumer and market coefficients.

    ``b = 0`` and ``d = 0`` give the constant-cost market with marginal cost
    ``C_i = a_i`` and marginal benefit ``B_j = c_j``.
    """

    m: int
    n: int
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    k_price: float
    h_gain: float
    lambda0: float

    def __post_init__(self):
        for name in ("a", "b", "c", "d", "alpha", "beta"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("k_price", "h_gain", "lambda0"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def dim(self) -> int:
        return self.m + self.n + 2

    @property
    def is_constant_cost(self) -> bool:
        return not (np.any(self.b) or np.any(self.d))

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "a": self.a.tolist(),
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "d": self.d.tolist(),
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "k_price": self.k_price,
            "h_gain": self.h_gain,
            "lambda0": self.lambda0,
        }

    def fingerprint(self) -> str:
        blob = repr(sorted(self.to_dict().items())).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, MarketParams):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def validate_params(raw: MarketParams) -> MarketParams:
    """Check shapes and signs; return ``raw`` unchanged when valid."""
    if int(raw.m) != raw.m or raw.m < 1:
        raise SignError("m", None, "m >= 1", raw.m)
    if int(raw.n) != raw.n or raw.n < 1:
        raise SignError("n", None, "n >= 1", raw.n)
    for name, size in (("a", raw.m), ("b", raw.m), ("alpha", raw.m),
                       ("c", raw.n), ("d", raw.n), ("beta", raw.n)):
        arr = getattr(raw, name)
        if arr.shape != (size,):
            raise DimensionError(name, size, arr.shape[0] if arr.ndim == 1 else arr.shape)
        if not np.all(np.isfinite(arr)):
            bad = int(np.flatnonzero(~np.isfinite(arr))[0])
            raise SignError(name, bad, "finite", arr[bad])
    for name, bound, strict in (("alpha", "> 0", True), ("beta", "> 0", True),
                                ("b", ">= 0", False), ("d", ">= 0", False)):
        arr = getattr(raw, name)
        bad = np.flatnonzero(arr <= 0) if strict else np.flatnonzero(arr < 0)
        if bad.size:
            i = int(bad[0])
            raise SignError(name, i, f"{name}_i {bound}", arr[i])
    for name in ("k_price", "h_gain"):
        value = getattr(raw, name)
        if not np.isfinite(value) or value < 0:
            raise SignError(name, None, ">= 0", value)
    if not np.isfinite(raw.lambda0):
        raise SignError("lambda0", None, "finite", raw.lambda0)
    return raw


def make_params(a, b, c, d, alpha, beta, k_price=1.0, h_gain=1.0, lambda0=0.0) -> MarketParams:
    """Build and validate parameters, inferring ``m`` and ``n`` from ``a`` and ``c``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return validate_params(MarketParams(
        m=a.shape[0], n=c.shape[0], a=a, b=b, c=c, d=d, alpha=alpha, beta=beta,
        k_price=k_price, h_gain=h_gain, lambda0=lambda0,
    ))


def params_from_dict(raw: dict) -> MarketParams:
    a = np.atleast_1d(np.asarray(raw["a"], dtype=float))
    c = np.atleast_1d(np.asarray(raw["c"], dtype=float))
    return validate_params(MarketParams(
        m=int(raw.get("m", a.shape[0])),
        n=int(raw.get("n", c.shape[0])),
        a=a, b=raw.get("b", np.zeros_like(a)), c=c, d=raw.get("d", np.zeros_like(c)),
        alpha=raw["alpha"], beta=raw["beta"],
        k_price=raw.get("k_price", 1.0), h_gain=raw.get("h_gain", 1.0),
        lambda0=raw.get("lambda0", 0.0),
    ))


def marginal_cost(params: MarketParams, S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.shape != (params.m,):
        raise DimensionError("S", params.m, S.shape)
    return params.a + params.b * S


def marginal_benefit(params: MarketParams, D) -> np.ndarray:
    D = np.asarray(D, dtype=float)
    if D.shape != (params.n,):
        raise DimensionError("D", params.n, D.shape)
    return params.c - params.d * D


@dataclass(frozen=True, eq=False)
class MarketState:
    t: float
    S: np.ndarray
    D: np.ndarray
    E: float
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "S", _frozen(self.S))
        object.__setattr__(self, "D", _frozen(self.D))
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "E", float(self.E))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def m(self) -> int:
        return self.S.shape[0]

    @property
    def n(self) -> int:
        return self.D.shape[0]

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.S, self.D, [self.E, self.lam]])

    @classmethod
    def from_vector(cls, t: float, x, m: int, n: int) -> MarketState:
        x = np.asarray(x, dtype=float)
        if x.shape != (m + n + 2,):
            raise DimensionError("x", m + n + 2, x.shape)
        return cls(t=t, S=x[:m], D=x[m:m + n], E=x[m + n], lam=x[m + n + 1])

    def check(self, params: MarketParams) -> MarketState:
        if self.S.shape != (params.m,):
            raise DimensionError("S", params.m, self.S.shape)
        if self.D.shape != (params.n,):
            raise DimensionError("D", params.n, self.D.shape)
        if not np.all(np.isfinite(self.to_vector())):
            raise ParameterError("state contains non-finite entries")
        return self

    def to_dict(self) -> dict:
        return {"t": self.t, "S": self.S.tolist(), "D": self.D.tolist(),
                "E": self.E, "lambda": self.lam}

    @classmethod
    def from_dict(cls, raw: dict) -> MarketState:
        return cls(t=raw.get("t", 0.0), S=raw["S"], D=raw["D"],
                   E=raw.get("E", 0.0), lam=raw["lambda"])

    def __eq__(self, other):
        if not isinstance(other, MarketState):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def state_labels(m: int, n: int, with_imbalance: bool = True) -> tuple[str, ...]:
    labels = [f"S_{i + 1}" for i in range(m)] + [f"D_{j + 1}" for j in range(n)]
    if with_imbalance:
        labels.append("E")
    labels.append("lambda")
    return tuple(labels)


@dataclass(frozen=True, eq=False)
class LinearSystem:
    """Affine descriptor system ``E_mat x' = A_mat x + B_vec``."""

    E_mat: np.ndarray
    A_mat: np.ndarray
    B_vec: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        E = _frozen(self.E_mat, 2)
        A = _frozen(self.A_mat, 2)
        B = _frozen(self.B_vec)
        if E.shape != A.shape or E.shape[0] != E.shape[1]:
            raise DimensionError("E_mat/A_mat", A.shape, E.shape)
        if B.shape != (A.shape[0],):
            raise DimensionError("B_vec", A.shape[0], B.shape)
        if len(self.labels) != A.shape[0]:
            raise DimensionError("labels", A.shape[0], len(self.labels))
        object.__setattr__(self, "E_mat", E)
        object.__setattr__(self, "A_mat", A)
        object.__setattr__(self, "B_vec", B)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def dim(self) -> int:
        return self.A_mat.shape[0]

    def rhs(self, x) -> np.ndarray:
        return self.A_mat @ np.asarray(x, dtype=float) + self.B_vec


class Variant(str, enum.Enum):
    FULL_CONSTANT = "full_constant"
    FULL_SLOPED = "full_sloped"
    BALANCED_DAE = "balanced_dae"


def assemble_linear_system(params: MarketParams, variant: Variant | str) -> LinearSystem:
    """Assemble ``(E, A, B)`` for one of the model variants.

    ``full_constant`` drops the cost/benefit slopes (``C = a``, ``B = c``);
    ``full_sloped`` keeps them, which is also the exact Jacobian of the
    nonlinear-looking right-hand side. ``balanced_dae`` is the descriptor
    form over ``(S, D, lambda)`` with the balance row ``0 = 1'S - 1'D``; its
    slope blocks vanish in the constant-cost case.
    """
    try:
        variant = Variant(variant)
    except ValueError:
        raise ValueError(f"unknown variant {variant!r}; expected one of "
                         f"{[v.value for v in Variant]}") from None
    m, n = params.m, params.n
    al, be = params.alpha, params.beta
    if variant is Variant.FULL_CONSTANT:
        slope_s, slope_d = np.zeros(m), np.zeros(n)
    else:
        slope_s, slope_d = -al * params.b, -be * params.d
    iS, iD = slice(0, m), slice(m, m + n)

    if variant is Variant.BALANCED_DAE:
        N = m + n + 1
        il = m + n
        E = np.diag(np.r_[np.ones(m + n), 0.0])
        A = np.zeros((N, N))
        A[iS, iS] = np.diag(slope_s)
        A[iD, iD] = np.diag(slope_d)
        A[iS, il] = al
        A[iD, il] = -be
        A[il, iS] = 1.0
        A[il, iD] = -1.0
        B = np.r_[-al * params.a, be * params.c, 0.0]
        return LinearSystem(E, A, B, state_labels(m, n, with_imbalance=False))

    N = m + n + 2
    iE, il = m + n, m + n + 1
    A = np.zeros((N, N))
    A[iS, iS] = np.diag(slope_s)
    A[iD, iD] = np.diag(slope_d)
    A[iS, il] = al
    A[iD, il] = -be
    A[iE, iS] = 1.0
    A[iE, iD] = -1.0
    A[il, iE] = -params.k_price
    A[il, il] = -params.h_gain
    B = np.r_[-al * params.a, be * params.c, 0.0, params.h_gain * params.lambda0]
    return LinearSystem(np.eye(N), A, B, state_labels(m, n))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Uniform-step trajectory; row ``i`` of ``X`` is the state at ``t0 + i*dt``."""

    dt: float
    t0: float
    X: np.ndarray
    m: int
    n: int
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "X", _frozen(self.X, 2))

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(len(self)) * self.dt

    @property
    def S(self) -> np.ndarray:
        return self.X[:, :self.m]

    @property
    def D(self) -> np.ndarray:
        return self.X[:, self.m:self.m + self.n]

    @property
    def E(self) -> np.ndarray:
        return self.X[:, self.m + self.n]

    @property
    def lam(self) -> np.ndarray:
        return self.X[:, self.m + self.n + 1]

    def state(self, i: int) -> MarketState:
        return MarketState.from_vector(self.t0 + i * self.dt, self.X[i], self.m, self.n)

    @property
    def states(self) -> list[MarketState]:
        return [self.state(i) for i in range(len(self))]

    @property
    def final(self) -> MarketState:
        return self.state(len(self) - 1)
