"""JSON scenario files: parsing, validation, serialisation and execution."""

from __future__ import annotations

import enum
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .continuous import (
    HistoryBuffer,
    MemorySpec,
    StepperConfig,
    simulate_dae_balanced,
    simulate_delay,
    simulate_ode,
    simulate_zero_imbalance,
    validate_memory,
)
from .discrete import simulate_discrete, simulate_discrete_memory
from .dispatch import DispatchProblem, clear_market, min_cost_dispatch
from .equilibrium import EquilibriumResult, Status, model_equilibrium
from .fractional import FractionalSpec, read_omega_csv, simulate_fractional, validate_fractional
from .model import MarketParams, MarketState, Variant, assemble_linear_system, params_from_dict
from .pencil import SpectrumReport, generalized_eigenvalues


class ScenarioError(ValueError):
    pass


class Model(str, enum.Enum):
    CONTINUOUS = "continuous"
    ZERO_IMBALANCE = "zero_imbalance"
    BALANCED_DAE = "balanced_dae"
    DISCRETE = "discrete"
    DISCRETE_MEMORY = "discrete_memory"
    DELAY = "delay"
    FRACTIONAL = "fractional"
    DISPATCH = "dispatch"


OUTPUTS = ("trajectory", "spectrum", "equilibrium", "dispatch")
MARKET_MODELS = tuple(m for m in Model if m is not Model.DISPATCH)


@dataclass(eq=False)
class Scenario:
    name: str
    model: Model
    params: MarketParams | None = None
    memory: MemorySpec | None = None
    fractional: FractionalSpec | None = None
    dispatch: DispatchProblem | None = None
    initial: MarketState | str | None = None
    stepper: StepperConfig | None = None
    outputs: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        out = {"name": self.name, "model": self.model.value}
        if self.params is not None:
            out["params"] = self.params.to_dict()
        if self.memory is not None:
            out["memory"] = self.memory.to_dict()
        if self.fractional is not None:
            out["fractional"] = self.fractional.to_dict()
        if self.dispatch is not None:
            out["dispatch"] = self.dispatch.to_dict()
        if self.initial is not None:
            out["initial"] = self.initial if isinstance(self.initial, str) else self.initial.to_dict()
        if self.stepper is not None:
            out["stepper"] = self.stepper.to_dict()
        out["outputs"] = list(self.outputs)
        return out

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def _section(raw: dict, key: str, builder, where: str):
    try:
        return builder(raw[key])
    except ScenarioError:
        raise
    except KeyError as exc:
        raise ScenarioError(f"{where}: section '{key}' is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: section '{key}': {exc}") from None


def _fractional_from_dict(raw: dict, base: Path) -> FractionalSpec:
    w = raw.get("omega_coi")
    if isinstance(w, dict):
        if "csv" in w:
            w = read_omega_csv(base / w["csv"])
        else:
            w = (w["t"], w["omega"])
    return FractionalSpec(
        ord_alpha=raw["ord_alpha"], ord_beta=raw["ord_beta"], ord_gamma=raw["ord_gamma"],
        H_d=raw["H_d"], K_E=raw.get("K_E", 0.0), omega_ref=raw.get("omega_ref", 0.0),
        omega_coi=w,
    )


def scenario_from_dict(raw: dict, where: str = "<scenario>", base: Path | None = None) -> Scenario:
    base = Path(".") if base is None else base
    if not isinstance(raw, dict):
        raise ScenarioError(f"{where}: top level must be a JSON object")
    for key in ("name", "model"):
        if key not in raw:
            raise ScenarioError(f"{where}: missing required field '{key}'")
    try:
        model = Model(raw["model"])
    except ValueError:
        raise ScenarioError(f"{where}: unknown model {raw['model']!r}; "
                            f"expected one of {[m.value for m in Model]}") from None
    outputs = tuple(raw.get("outputs", ()))
    bad = [o for o in outputs if o not in OUTPUTS]
    if bad:
        raise ScenarioError(f"{where}: unknown outputs {bad}; expected a subset of {list(OUTPUTS)}")

    sc = Scenario(name=str(raw["name"]), model=model, outputs=outputs)
    if model is Model.DISPATCH:
        if "dispatch" not in raw:
            raise ScenarioError(f"{where}: model 'dispatch' requires a 'dispatch' section")
        sc.dispatch = _section(raw, "dispatch", DispatchProblem.from_dict, where)
        return sc

    if "params" not in raw:
        raise ScenarioError(f"{where}: model '{model.value}' requires a 'params' section")
    sc.params = _section(raw, "params", params_from_dict, where)
    if "stepper" not in raw:
        raise ScenarioError(f"{where}: model '{model.value}' requires a 'stepper' section")
    sc.stepper = _section(raw, "stepper", lambda s: StepperConfig(
        dt=s["dt"], t_end=s["t_end"], method=s.get("method", "rk4")), where)
    if model in (Model.DISCRETE_MEMORY, Model.DELAY):
        if "memory" not in raw:
            raise ScenarioError(f"{where}: model '{model.value}' requires a 'memory' section")
        sc.memory = _section(raw, "memory", lambda s: MemorySpec.build(
            sc.params, s["p"], s["lag_step"], s["w_alpha"], s["w_beta"],
            s.get("w_k"), s.get("w_h")), where)
    if model is Model.FRACTIONAL:
        if "fractional" not in raw:
            raise ScenarioError(f"{where}: model 'fractional' requires a 'fractional' section")
        sc.fractional = _section(raw, "fractional", lambda s: validate_fractional(
            _fractional_from_dict(s, base), sc.params), where)
    if "dispatch" in raw:
        sc.dispatch = _section(raw, "dispatch", DispatchProblem.from_dict, where)

    init = raw.get("initial", "equilibrium")
    if init == "equilibrium":
        sc.initial = "equilibrium"
    elif isinstance(init, dict):
        sc.initial = _section(raw, "initial", lambda s: MarketState.from_dict(s).check(sc.params), where)
    else:
        raise ScenarioError(f"{where}: 'initial' must be \"equilibrium\" or a state object")
    resolve_initial(sc)
    return sc


def parse_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc.strerror}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from None
    return scenario_from_dict(raw, where=str(path), base=path.parent)


def equilibrium_variant(model: Model) -> Variant:
    return Variant.BALANCED_DAE if model is Model.BALANCED_DAE else Variant.FULL_SLOPED


def scenario_equilibrium(sc: Scenario) -> EquilibriumResult:
    if sc.model in (Model.DISPATCH, Model.FRACTIONAL):
        raise ScenarioError(f"{sc.name}: no market equilibrium is defined for model '{sc.model.value}'")
    result = model_equilibrium(sc.params, equilibrium_variant(sc.model))
    mem = sc.memory
    if mem is not None and result.status is Status.UNIQUE and mem.w_k.sum() > 0:
        # lag weights move the stationary imbalance of the price law
        st = result.state
        E = mem.w_h.sum() * (sc.params.lambda0 - st.lam) / mem.w_k.sum()
        state = MarketState(t=0.0, S=st.S, D=st.D, E=E, lam=st.lam)
        result = EquilibriumResult(state, result.residual_norm, result.status, state.to_vector())
    return result


def resolve_initial(sc: Scenario) -> MarketState:
    if isinstance(sc.initial, MarketState):
        return sc.initial
    if sc.model is Model.FRACTIONAL:
        raise ScenarioError(f"{sc.name}: initial=\"equilibrium\" is not available for the fractional model")
    result = scenario_equilibrium(sc)
    if result.status is not Status.UNIQUE:
        raise ScenarioError(f"{sc.name}: initial=\"equilibrium\" requires a unique equilibrium, "
                            f"got status {result.status.value}")
    return result.state


# ---------------------------------------------------------------------------
# execution


def run_simulation(sc: Scenario):
    """Run the scenario's time-stepping model; returns ``(trajectory, constraint_log | None)``."""
    if sc.model is Model.DISPATCH:
        raise ScenarioError(f"{sc.name}: the dispatch model has no trajectory")
    x0 = resolve_initial(sc)
    p, cfg = sc.params, sc.stepper
    if sc.model is Model.CONTINUOUS:
        return simulate_ode(p, x0, cfg), None
    if sc.model is Model.ZERO_IMBALANCE:
        return simulate_zero_imbalance(p, x0, cfg)
    if sc.model is Model.BALANCED_DAE:
        return simulate_dae_balanced(p, x0, cfg), None
    if sc.model is Model.DISCRETE:
        return simulate_discrete(p, x0, cfg.dt, cfg.n_steps), None
    if sc.model is Model.DISCRETE_MEMORY:
        validate_memory(sc.memory, p)
        n_steps = int(round(cfg.t_end / sc.memory.lag_step))
        return simulate_discrete_memory(p, sc.memory, x0, n_steps), None
    if sc.model is Model.DELAY:
        return simulate_delay(p, sc.memory, HistoryBuffer.constant(x0, sc.memory), cfg), None
    return simulate_fractional(p, sc.fractional, x0, cfg), None


def run_stability(sc: Scenario, variant: Variant | str | None = None) -> SpectrumReport:
    if sc.params is None:
        raise ScenarioError(f"{sc.name}: stability analysis needs market parameters")
    if sc.model is Model.FRACTIONAL:
        raise ScenarioError(f"{sc.name}: fractional runs have no pencil spectrum; judge them by simulation")
    variant = equilibrium_variant(sc.model) if variant is None else Variant(variant)
    sys = assemble_linear_system(sc.params, variant)
    return generalized_eigenvalues(sys.E_mat, sys.A_mat)


def run_dispatch(sc: Scenario):
    if sc.dispatch is None:
        raise ScenarioError(f"{sc.name}: no 'dispatch' section")
    if sc.dispatch.total_demand is not None:
        return min_cost_dispatch(sc.dispatch)
    return clear_market(sc.dispatch)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_trajectory_csv(traj, path, labels=None) -> Path:
    path = Path(path)
    m, n = traj.m, traj.n
    header = ["t"] + [f"S_{i + 1}" for i in range(m)] + [f"D_{j + 1}" for j in range(n)] + ["E", "lambda"]
    lines = [",".join(header)]
    for t, row in zip(traj.times, traj.X):
        lines.append(",".join([_fmt(t)] + [_fmt(v) for v in row]))
    path.write_text("\n".join(lines) + "\n")
    return path


def write_constraint_csv(log, path) -> Path:
    path = Path(path)
    lines = ["t,residual"] + [f"{_fmt(t)},{_fmt(r)}" for t, r in zip(log.times, log.residual)]
    path.write_text("\n".join(lines) + "\n")
    return path


def _json_safe(obj):
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(obj: dict, path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_json_safe(obj), indent=2, allow_nan=False) + "\n")
    return path


def produce(sc: Scenario, artifact: str, out_dir, variant=None) -> list[Path]:
    """Compute one artifact for ``sc`` and write it under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = out_dir / sc.name
    if artifact == "trajectory":
        traj, log = run_simulation(sc)
        written = [write_trajectory_csv(traj, f"{stem}.trajectory.csv")]
        if log is not None:
            written.append(write_constraint_csv(log, f"{stem}.constraint.csv"))
        return written
    if artifact == "spectrum":
        return [write_json(run_stability(sc, variant).to_dict(), f"{stem}.spectrum.json")]
    if artifact == "equilibrium":
        return [write_json(scenario_equilibrium(sc).to_dict(), f"{stem}.equilibrium.json")]
    if artifact == "dispatch":
        return [write_json(run_dispatch(sc).to_dict(), f"{stem}.dispatch.json")]
    raise ScenarioError(f"unknown artifact {artifact!r}")


def run_scenario(sc: Scenario, out_dir=None) -> list[Path]:
    """Write every artifact listed in ``sc.outputs``."""
    out_dir = out_dir or os.environ.get("EMX_OUT_DIR", ".")
    written = []
    for artifact in sc.outputs:
        written += produce(sc, artifact, out_dir)
    return written
