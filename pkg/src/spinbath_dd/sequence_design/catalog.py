"""Published minimum-pulse sequences and the Uhrig / quadratic comparison sequences."""

from __future__ import annotations

import math

import numpy as np

from .types import DDSequence, PulseAxis, normalized, parity_pulse

_S33 = math.sqrt(33.0)

DECIMAL_TOL = 5e-4

# (axes, intervals, exact?) ; decimal entries are the printed 4-6 digit values
_CATALOG = {
    "m1_xz": ("xzx", (0.25, 0.25, 0.25, 0.25), True),
    "m2_xzxzxz": (
        "xzxzxz",
        ((7 - _S33) / 16, 1 / 8, (_S33 - 3) / 16, 1 / 4, (_S33 - 3) / 16, 1 / 8, (7 - _S33) / 16),
        True,
    ),
    "m2_app1_xzxxzx": ("xzxxzx", (1 / 8, 1 / 8, 1 / 8, 1 / 4, 1 / 8, 1 / 8, 1 / 8), True),
    "m2_app2_xzxxyx": ("xzxxyx", (0.104715, 0.145282, 1 / 8, 1 / 4, 1 / 8, 0.145282, 0.104715), False),
    # third entry printed as 0.1596; the constraint solution is 0.15693 (digits transposed)
    "m2_app3_xzxzyz": ("xzxzyz", (0.0785, 0.1396, 0.1569, 1 / 4, 0.1715, 0.0931, 0.1104), False),
    "m2_app4_xzxyzy": ("xzxyzy", (1 / 8, 0.095491, 0.1545, 1 / 4, 0.1545, 0.095491, 1 / 8), False),
    # ninth entry printed as 0.0823; the printed set then sums to 0.9996 and
    # the solution is 0.08269
    "m3_xz": (
        "xzxzxzxzxzxz",
        (0.0171, 0.0468, 0.0658, 0.1013, 0.1184, 0.1006, 0.1195, 0.1049, 0.0827, 0.1025,
         0.0647, 0.0439, 0.0318),
        False,
    ),
}

NOMINAL_ORDER = {name: int(name[1]) for name in _CATALOG}
CATALOG_NAMES = tuple(_CATALOG)


def catalog_sequence(name: str, period_T: float = 1.0, pulse_width_tau_p: float = 0.0) -> DDSequence:
    """A published sequence by name.

    Entries known only to a few printed digits are renormalized to sum to
    one and carry a moment tolerance of 5e-4; use
    :func:`~spinbath_dd.sequence_design.solver.refine` for the exact solution.
    """
    try:
        axes, alphas, exact = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown sequence {name!r}; choose from {', '.join(_CATALOG)}") from None
    return DDSequence(axes, normalized(alphas), None, period_T, pulse_width_tau_p,
                      1e-8 if exact else DECIMAL_TOL, name)


def exact_sequence(name: str, period_T: float = 1.0, pulse_width_tau_p: float = 0.0) -> DDSequence:
    """Catalog sequence polished onto the exact constraint solution."""
    from .solver import refine

    seq = catalog_sequence(name, period_T, pulse_width_tau_p)
    if seq.moment_tol <= 1e-8:
        return seq
    return refine(seq, NOMINAL_ORDER[name])


def _from_centers(centers, axes, period_T: float, name: str) -> DDSequence:
    c = np.asarray(centers, dtype=float) / period_T
    edges = np.concatenate([[0.0], c, [1.0]])
    return DDSequence(tuple(axes), normalized(np.diff(edges)), None, period_T, 0.0, 1e-8, name)


def udd_times(N: int) -> np.ndarray:
    """Uhrig pulse centers in units of the period: sin^2(k pi / (2N + 2))."""
    if N < 1:
        raise ValueError("UDD needs at least one pulse")
    k = np.arange(1, N + 1)
    return np.sin(k * np.pi / (2 * N + 2)) ** 2


def udd_sequence(N: int, T: float = 1.0, axis: PulseAxis | str = PulseAxis.X) -> DDSequence:
    """UDD-N: N pi pulses about one axis at T sin^2(k pi / (2N+2))."""
    ax = PulseAxis.parse(axis)
    if ax is PulseAxis.I:
        raise ValueError("UDD axis must be x, y or z")
    return _from_centers(T * udd_times(N), [ax] * N, T, f"udd{N}_{ax.value}")


def qdd_sequence(N: int, T: float = 1.0) -> DDSequence:
    """QDD-N: outer UDD-N of z pulses with an inner UDD-N of x pulses in each outer interval."""
    outer = np.concatenate([[0.0], udd_times(N), [1.0]])
    inner = udd_times(N)
    events = [(t, PulseAxis.Z) for t in outer[1:-1]]
    for a, b in zip(outer[:-1], outer[1:]):
        events += [(a + (b - a) * u, PulseAxis.X) for u in inner]
    events.sort(key=lambda e: e[0])
    return _from_centers([T * e[0] for e in events], [e[1] for e in events], T, f"qdd{N}")


def free_sequence(T: float = 1.0) -> DDSequence:
    """No pulses at all (free decay over one period)."""
    return DDSequence((), (1.0,), PulseAxis.I, T, 0.0, 1e-8, "free")


__all__ = [
    "CATALOG_NAMES", "NOMINAL_ORDER", "catalog_sequence", "exact_sequence", "free_sequence",
    "parity_pulse", "qdd_sequence", "udd_sequence", "udd_times",
]
