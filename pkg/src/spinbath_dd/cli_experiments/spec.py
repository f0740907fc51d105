"""Experiment specifications and their JSON form."""

from __future__ import annotations

import enum
import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..dynamics import Insertion, Mode, Schedule
from ..sequence_design import (CATALOG_NAMES, DDSequence, exact_sequence, free_sequence, normalized,
                               qdd_sequence, udd_sequence)
from ..spin_model import ConfigError, ModelConfig, pulse_width_from_field


class SpecError(ValueError):
    """A spec field failed validation; ``field`` names it with a dotted path."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path


class Kind(str, enum.Enum):
    DERIVE_SEQUENCES = "derive_sequences"
    ECHO_CURVE = "echo_curve"
    CONCURRENCE_CURVE = "concurrence_curve"
    RELAXATION_CURVE = "relaxation_curve"
    INSERTION_COMPARISON = "insertion_comparison"
    EFFECTIVE_DYNAMICS = "effective_dynamics"
    NOP_SWEEP = "nop_sweep"
    ORACLE_CROSSCHECK = "oracle_crosscheck"
    SLOPE_CHECK = "slope_check"


_UDD = re.compile(r"^udd(\d+)(?:_([xyz]))?$")
_QDD = re.compile(r"^qdd(\d+)$")


def resolve_sequence(name, period_T: float = 1.0, tau_p: float = 0.0) -> DDSequence:
    """Build a sequence from a catalog name, ``uddN[_axis]``, ``qddN``, ``free`` or an
    ``{"axes": ..., "alphas": [...]}`` mapping."""
    if isinstance(name, dict):
        seq = DDSequence(name.get("axes", ""), normalized(name["alphas"]), None, period_T, tau_p,
                         float(name.get("moment_tol", 1e-8)), name.get("name", "custom"))
        return seq
    if name == "free":
        return free_sequence(period_T).with_period(period_T, tau_p)
    if name in CATALOG_NAMES:
        return exact_sequence(name, period_T, tau_p)
    if m := _UDD.match(name):
        return udd_sequence(int(m.group(1)), period_T, m.group(2) or "x").with_period(period_T, tau_p)
    if m := _QDD.match(name):
        return qdd_sequence(int(m.group(1)), period_T).with_period(period_T, tau_p)
    raise KeyError(f"unknown sequence {name!r}")


def sequence_label(name) -> str:
    return name.get("name", "custom") if isinstance(name, dict) else str(name)


@dataclass(frozen=True)
class ScheduleSpec:
    """How to build a :class:`Schedule`.

    ``period_T = None`` means the critical period tau_p / min(alpha).
    The pulse width is given directly (``tau_p``) or through a field ``B`` in
    tesla, converted with the model's ``J_meV``.
    """

    sequence: str | dict = "m2_xzxzxz"
    period_T: float | None = 1.0
    mode: str = "ideal"
    tau_p: float = 0.0
    B: float | None = None
    insertion: str = "none"
    theta: float = 0.0
    n_cycles: int = 1

    def pulse_width(self, model: ModelConfig, B: float | None = None) -> float:
        field_T = self.B if B is None else B
        if field_T is not None:
            return pulse_width_from_field(model.J_meV, field_T)
        return self.tau_p

    def build(self, model: ModelConfig, sequence=None, B: float | None = None, period_T=None,
              theta: float | None = None, insertion: str | None = None) -> Schedule:
        name = self.sequence if sequence is None else sequence
        mode = Mode(self.mode)
        tau = self.pulse_width(model, B) if mode is Mode.FINITE else 0.0
        seq = resolve_sequence(name, 1.0, tau)
        T = self.period_T if period_T is None else period_T
        if T is None:
            if tau <= 0:
                raise SpecError("schedule.period_T", "the critical period needs a finite pulse width")
            T = seq.critical_period(tau)
        seq = seq.with_period(T, tau)
        return Schedule(seq, mode, Insertion(self.insertion if insertion is None else insertion),
                        self.theta if theta is None else theta, self.n_cycles)


@dataclass(frozen=True)
class ExperimentSpec:
    kind: Kind
    model: ModelConfig = field(default_factory=ModelConfig)
    schedule: ScheduleSpec = field(default_factory=ScheduleSpec)
    sweep: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", Kind(self.kind))
        except ValueError:
            raise SpecError("kind", f"unknown experiment kind {self.kind!r}") from None
        for key, values in self.sweep.items():
            if key not in ("B", "T", "theta", "L", "J_meV"):
                raise SpecError(f"sweep.{key}", "unknown sweep parameter")
            if not isinstance(values, list) or not values:
                raise SpecError(f"sweep.{key}", "must be a non-empty list")

    def to_dict(self) -> dict:
        model = asdict(self.model)
        model["coupling"] = self.model.coupling.value
        model["qubit_sites"] = list(self.model.qubit_sites)
        model.pop("max_sites")
        return {"kind": self.kind.value, "model": model, "schedule": asdict(self.schedule),
                "sweep": self.sweep, "options": self.options}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @property
    def digest(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def option(self, key: str, default):
        return self.options.get(key, default)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        if not isinstance(data, dict):
            raise SpecError("<root>", "spec must be a JSON object")
        unknown = set(data) - {"kind", "model", "schedule", "sweep", "options"}
        if unknown:
            raise SpecError(sorted(unknown)[0], "unknown top-level field")
        if "kind" not in data:
            raise SpecError("kind", "missing")
        model_data = dict(data.get("model", {}))
        if "qubit_sites" in model_data:
            model_data["qubit_sites"] = tuple(model_data["qubit_sites"])
        try:
            model = ModelConfig(**model_data)
        except ConfigError as exc:
            raise SpecError(f"model.{exc.key}" if exc.key else "model", str(exc)) from None
        except TypeError as exc:
            raise SpecError("model", str(exc)) from None
        try:
            sched = ScheduleSpec(**data.get("schedule", {}))
        except TypeError as exc:
            raise SpecError("schedule", str(exc)) from None
        if sched.mode not in ("ideal", "finite"):
            raise SpecError("schedule.mode", f"unknown mode {sched.mode!r}")
        if sched.insertion not in {i.value for i in Insertion}:
            raise SpecError("schedule.insertion", f"unknown insertion {sched.insertion!r}")
        if sched.n_cycles < 1:
            raise SpecError("schedule.n_cycles", "must be at least 1")
        if sched.B is not None and not sched.B > 0:
            raise SpecError("schedule.B", "field must be positive")
        if sched.period_T is not None and not (sched.period_T > 0 and math.isfinite(sched.period_T)):
            raise SpecError("schedule.period_T", "must be positive")
        return cls(data["kind"], model, sched, dict(data.get("sweep", {})), dict(data.get("options", {})))

    @classmethod
    def from_json(cls, text: str) -> "ExperimentSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"line {exc.lineno}", f"invalid JSON: {exc.msg}") from None
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentSpec":
        return cls.from_json(Path(path).read_text())
