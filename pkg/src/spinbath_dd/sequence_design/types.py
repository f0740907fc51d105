"""Pulse axes, decoupling sequences and their toggling-frame sign histories."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SUM_TOL = 1e-12


class PulseAxis(str, enum.Enum):
    X = "x"
    Y = "y"
    Z = "z"
    I = "i"  # noqa: E741  (only legal as a parity pulse)

    @classmethod
    def parse(cls, value: "PulseAxis | str") -> "PulseAxis":
        if isinstance(value, PulseAxis):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown pulse axis {value!r}") from None

    @property
    def index(self) -> int:
        """Position of the axis in (x, y, z); -1 for the identity."""
        return {"x": 0, "y": 1, "z": 2, "i": -1}[self.value]


PAULI_AXES = (PulseAxis.X, PulseAxis.Y, PulseAxis.Z)


def parse_axes(axes: str | Iterable[PulseAxis | str]) -> tuple[PulseAxis, ...]:
    """Accept ``"xzx"`` or an iterable of axes and return a tuple of PulseAxis."""
    if isinstance(axes, str):
        axes = list(axes.replace(" ", "").replace(",", ""))
    return tuple(PulseAxis.parse(a) for a in axes)


def parity_pulse(interior_axes: str | Iterable[PulseAxis | str]) -> PulseAxis:
    """Axis of the Pauli product of the interior pulses, up to a phase.

    Returns ``PulseAxis.I`` when the product is proportional to the identity.
    """
    current = PulseAxis.I
    for ax in parse_axes(interior_axes):
        if ax is PulseAxis.I:
            raise ValueError("interior pulses must be x, y or z")
        if current is PulseAxis.I:
            current = ax
        elif current is ax:
            current = PulseAxis.I
        else:
            # product of two distinct Paulis is the third one (times +-i)
            (current,) = set(PAULI_AXES) - {current, ax}
    return current


@dataclass(frozen=True)
class DDSequence:
    """One decoupling cycle of ideal or square pi pulses.

    ``intervals`` are the fractions of the period separating consecutive
    pulse centers, starting at t=0 and ending at the parity pulse at T.
    ``moment_tol`` is the relative tolerance used by :func:`verify_order`;
    sequences built from printed decimals carry a looser one.
    """

    interior_axes: tuple[PulseAxis, ...]
    intervals: tuple[float, ...]
    parity_axis: PulseAxis | None = None
    period_T: float = 1.0
    pulse_width_tau_p: float = 0.0
    moment_tol: float = 1e-8
    name: str = ""

    def __post_init__(self):
        axes = parse_axes(self.interior_axes)
        object.__setattr__(self, "interior_axes", axes)
        if any(a is PulseAxis.I for a in axes):
            raise ValueError("identity is only legal as a parity pulse")
        alphas = tuple(float(a) for a in self.intervals)
        object.__setattr__(self, "intervals", alphas)
        if len(alphas) != len(axes) + 1:
            raise ValueError(
                f"{len(axes)} interior pulses need {len(axes) + 1} intervals, got {len(alphas)}")
        if min(alphas) <= 0.0:
            raise ValueError("all intervals must be positive")
        if abs(sum(alphas) - 1.0) > SUM_TOL:
            raise ValueError(f"intervals sum to {sum(alphas)!r}, expected 1")
        expected = parity_pulse(axes)
        if self.parity_axis is None:
            object.__setattr__(self, "parity_axis", expected)
        else:
            par = PulseAxis.parse(self.parity_axis)
            if par is not expected:
                raise ValueError(f"parity pulse {par.value} does not match net product {expected.value}")
            object.__setattr__(self, "parity_axis", par)
        if self.period_T <= 0:
            raise ValueError("period must be positive")
        if self.pulse_width_tau_p < 0:
            raise ValueError("pulse width must be non-negative")

    @property
    def n_interior(self) -> int:
        return len(self.interior_axes)

    @property
    def n_pulses(self) -> int:
        """Pulse count per cycle, including a non-trivial parity pulse."""
        return self.n_interior + (self.parity_axis is not PulseAxis.I)

    @property
    def axes_string(self) -> str:
        return "".join(a.value for a in self.interior_axes)

    @property
    def alphas(self) -> np.ndarray:
        return np.asarray(self.intervals)

    def pulse_centers(self) -> np.ndarray:
        """Centers of the interior pulses, in units of time."""
        return self.period_T * np.cumsum(self.intervals)[:-1]

    def critical_period(self, tau_p: float | None = None) -> float:
        """Shortest period for which square pulses of width tau_p do not overlap."""
        tau = self.pulse_width_tau_p if tau_p is None else tau_p
        return tau / min(self.intervals)

    def is_non_overlapping(self) -> bool:
        if self.pulse_width_tau_p == 0.0:
            return True
        return self.period_T * min(self.intervals) >= self.pulse_width_tau_p * (1 - 1e-12)

    def with_period(self, period_T: float, pulse_width_tau_p: float | None = None) -> "DDSequence":
        return DDSequence(
            self.interior_axes, self.intervals, self.parity_axis, period_T,
            self.pulse_width_tau_p if pulse_width_tau_p is None else pulse_width_tau_p,
            self.moment_tol, self.name)

    def relabeled(self, mapping: dict[str, str]) -> "DDSequence":
        """Sequence with pulse axes renamed, e.g. the cyclic map x->y->z->x."""
        axes = tuple(PulseAxis(mapping[a.value]) for a in self.interior_axes)
        return DDSequence(axes, self.intervals, None, self.period_T,
                          self.pulse_width_tau_p, self.moment_tol, self.name)


CYCLIC_RELABEL = {"x": "y", "y": "z", "z": "x"}


def normalized(alphas: Sequence[float]) -> tuple[float, ...]:
    """Rescale positive fractions so that they sum to one."""
    a = np.asarray(alphas, dtype=float)
    a = a / a.sum()
    # push the rounding residue into the largest entry
    a[np.argmax(a)] += 1.0 - a.sum()
    return tuple(float(v) for v in a)


@dataclass(frozen=True)
class SignHistory:
    """Piecewise-constant toggling signs f_x, f_y, f_z.

    ``signs[mu, j]`` is the sign of axis ``mu`` on ``[boundaries[j], boundaries[j+1])``.
    """

    boundaries: np.ndarray
    signs: np.ndarray = field(repr=False)

    @property
    def period(self) -> float:
        return float(self.boundaries[-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.boundaries)

    def __call__(self, t, axis: int | PulseAxis | str) -> np.ndarray:
        """Evaluate f_axis at times t (right-continuous)."""
        mu = _axis_index(axis)
        idx = np.searchsorted(self.boundaries, np.asarray(t, dtype=float), side="right") - 1
        idx = np.clip(idx, 0, self.signs.shape[1] - 1)
        return self.signs[mu, idx]


def _axis_index(axis) -> int:
    if isinstance(axis, (int, np.integer)):
        return int(axis)
    mu = PulseAxis.parse(axis).index
    if mu < 0:
        raise ValueError("identity has no sign history")
    return mu


def sign_table(axes: Sequence[PulseAxis]) -> np.ndarray:
    """Signs (3, n+1) produced by the flip rule for a list of pulse axes."""
    signs = np.ones((3, len(axes) + 1))
    current = np.ones(3)
    for j, ax in enumerate(axes):
        mu = ax.index
        flip = -np.ones(3)
        flip[mu] = 1.0
        current = current * flip
        signs[:, j + 1] = current
    return signs


def sign_history(seq: DDSequence) -> SignHistory:
    """Toggling-frame sign history of a sequence.

    Starting from (+1, +1, +1), a pi pulse about axis mu negates the two
    other axes and leaves f_mu unchanged.
    """
    bounds = np.concatenate([[0.0], seq.period_T * np.cumsum(seq.intervals)])
    bounds[-1] = seq.period_T
    return SignHistory(bounds, sign_table(seq.interior_axes))
