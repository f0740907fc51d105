"""Time evolution under pulse sequences and the qubit observables.

Two propagators share one interface: a second-order Trotter splitting over
local terms, and exact propagation (dense eigendecomposition for small
spaces, Krylov ``expm_multiply`` otherwise). A schedule is compiled into a
flat list of segments (timed evolutions and instantaneous gates) that both
propagators walk.

Finite-width pulses are square with amplitude pi / tau_p. When the cycle
ends on a parity pulse the whole train is shifted left by tau_p / 2, so
pulse k is centered at t_k - tau_p / 2 and the parity pulse finishes
exactly at T. The cycle is then periodic with period T and reduces to the
ideal one as tau_p -> 0.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .sequence_design import DDSequence, PulseAxis, sign_history
from .spin_model import (DENSE_LIMIT, PAULI, SPIN, LocalTerm, Model, _sum_terms, bell_state, interaction_terms,
                         qubit_basis_state)

DT_RANGE = (0.001, 0.05)
NORM_TOL = 1e-6
TIME_TOL = 1e-12


class NumericalError(RuntimeError):
    """Loss of unitarity or an invalid density matrix."""


class OverlapError(ValueError):
    """Finite-width pulses would overlap at the requested period."""


class Mode(str, enum.Enum):
    IDEAL = "ideal"
    FINITE = "finite"


class Insertion(str, enum.Enum):
    NONE = "none"
    CONSTANT_FIELD = "constant_field"
    MID_CYCLE = "mid_cycle"
    AFTER_CYCLE = "after_cycle"


# -- states -------------------------------------------------------------------


@dataclass
class QuantumState:
    amplitudes: np.ndarray = field(repr=False)
    time: float = 0.0
    n_qubits: int = 1

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def copy(self) -> "QuantumState":
        return QuantumState(self.amplitudes.copy(), self.time, self.n_qubits)


@dataclass(frozen=True)
class ReducedDensity:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"expected a 2x2 or 4x4 density matrix, got {m.shape}")
        if np.max(np.abs(m - m.conj().T)) > 1e-9:
            raise NumericalError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > 1e-9:
            raise NumericalError(f"density matrix trace {np.trace(m).real:.12f} != 1")
        if np.linalg.eigvalsh(m).min() < -1e-8:
            raise NumericalError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def pure(cls, vec) -> "ReducedDensity":
        v = np.asarray(vec, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))


def reduced_density(state: QuantumState, qubit_indices=None) -> ReducedDensity:
    """Trace out the chain and any qubit not listed."""
    nq = state.n_qubits
    keep = tuple(range(nq)) if qubit_indices is None else tuple(qubit_indices)
    if not keep or any(not 0 <= q < nq for q in keep) or len(set(keep)) != len(keep):
        raise ValueError(f"invalid qubit indices {keep} for {nq} qubit(s)")
    psi = state.amplitudes.reshape((2,) * nq + (-1,))
    rest = [q for q in range(nq) if q not in keep]
    a = np.transpose(psi, list(keep) + rest + [nq]).reshape(2 ** len(keep), -1)
    rho = a @ a.conj().T
    rho = (rho + rho.conj().T) / 2
    return ReducedDensity(rho / np.trace(rho).real)


# -- observables ----------------------------------------------------------------


def loschmidt_echo(rho: ReducedDensity, initial=0.5) -> float:
    """|rho_{+-}|**2 normalized by the initial off-diagonal magnitude.

    ``initial`` is either the initial reduced density or the number
    |rho_{+-}(0)| (1/2 for |+x>).
    """
    if rho.dim != 2:
        raise ValueError("the echo is defined for a single qubit")
    ref = abs(initial.matrix[0, 1]) if isinstance(initial, ReducedDensity) else float(initial)
    if ref == 0:
        return math.nan
    return float(abs(rho.matrix[0, 1]) ** 2 / ref ** 2)


def magnetization(rho: ReducedDensity) -> float:
    if rho.dim != 2:
        raise ValueError("magnetization is defined for a single qubit")
    return float(np.real(np.trace(rho.matrix @ PAULI[2])))


_YY = np.kron(PAULI[1], PAULI[1])


def concurrence(rho: ReducedDensity) -> float:
    """Wootters concurrence of a two-qubit state."""
    if rho.dim != 4:
        raise ValueError("concurrence needs a two-qubit density matrix")
    m = rho.matrix
    if np.linalg.eigvalsh(m).min() < -1e-8:
        raise NumericalError("invalid density matrix: negative eigenvalue")
    R = m @ _YY @ m.conj() @ _YY
    ev = np.linalg.eigvals(R)
    if ev.real.min() < -1e-8:
        raise NumericalError("negative eigenvalue in rho * rho_tilde")
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def trace_distance(rho_a: ReducedDensity, rho_b: ReducedDensity) -> float:
    """Tr|rho_a - rho_b| (no factor 1/2; orthogonal pure states give 2)."""
    if rho_a.dim != rho_b.dim:
        raise ValueError("density matrices have different dimensions")
    return float(np.abs(np.linalg.eigvalsh(rho_a.matrix - rho_b.matrix)).sum())


# -- local gate application --------------------------------------------------------


def apply_local(psi: np.ndarray, U: np.ndarray, sites, n_sites: int) -> np.ndarray:
    """Apply a k-site unitary to a state vector (dim,) or a block of columns (dim, m)."""
    k = len(sites)
    extra = psi.shape[1:]
    t = psi.reshape((2,) * n_sites + extra)
    out = np.tensordot(U.reshape((2,) * (2 * k)), t, axes=(list(range(k, 2 * k)), list(sites)))
    out = np.moveaxis(out, list(range(k)), list(sites))
    return out.reshape(psi.shape)


def rotation(axis: PulseAxis | str, angle: float) -> np.ndarray:
    """exp(-i angle s.n) on one qubit; angle pi gives -i sigma_n."""
    ax = PulseAxis.parse(axis)
    if ax is PulseAxis.I:
        return np.eye(2, dtype=complex)
    return math.cos(angle / 2) * np.eye(2) - 1j * math.sin(angle / 2) * PAULI[ax.index]


# -- schedules -----------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    """Either a timed evolution under H0 plus controls, or an instantaneous gate."""

    duration: float
    controls: tuple[tuple[str, float], ...] = ()
    gate: tuple[str, float] | None = None


@dataclass(frozen=True)
class Schedule:
    """A decoupling sequence repeated ``n_cycles`` times, optionally with a computing pulse.

    In finite-width mode the pulse width comes from ``seq.pulse_width_tau_p``
    and the computing pulse has the same width.
    """

    seq: DDSequence
    mode: Mode = Mode.IDEAL
    insertion: Insertion = Insertion.NONE
    theta: float = 0.0
    n_cycles: int = 1
    computing_axis: PulseAxis = PulseAxis.X

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        object.__setattr__(self, "insertion", Insertion(self.insertion))
        object.__setattr__(self, "computing_axis", PulseAxis.parse(self.computing_axis))
        if self.n_cycles < 1:
            raise ValueError("n_cycles must be at least 1")
        if self.mode is Mode.FINITE:
            tau = self.seq.pulse_width_tau_p
            if tau <= 0:
                raise ValueError("finite-width mode needs a positive pulse width")
            if not self.seq.is_non_overlapping():
                raise OverlapError(
                    f"pulses of width {tau:g} overlap at T={self.seq.period_T:g}; "
                    f"need T >= {self.seq.critical_period():.6g}")
            if self.insertion is Insertion.MID_CYCLE:
                j = self.mid_interval
                if self.seq.period_T * self.seq.intervals[j] < 2 * tau * (1 - 1e-12):
                    raise OverlapError("no room for the computing pulse in the middle interval")

    @property
    def tau_p(self) -> float:
        return self.seq.pulse_width_tau_p if self.mode is Mode.FINITE else 0.0

    @property
    def mid_interval(self) -> int:
        """Index of the free interval whose midpoint is closest to T/2."""
        edges = np.concatenate([[0.0], np.cumsum(self.seq.intervals)])
        mids = (edges[:-1] + edges[1:]) / 2
        return int(np.argmin(np.abs(mids - 0.5)))

    @property
    def block_duration(self) -> float:
        extra = self.tau_p if self.insertion is Insertion.AFTER_CYCLE else 0.0
        return self.seq.period_T + extra

    @property
    def total_duration(self) -> float:
        return self.n_cycles * self.block_duration

    def with_(self, **changes) -> "Schedule":
        from dataclasses import replace

        return replace(self, **changes)


def cycle_segments(schedule: Schedule) -> list[Segment]:
    """One cycle (plus computing pulse) as a list of segments."""
    seq = schedule.seq
    T, tau = seq.period_T, schedule.tau_p
    theta, cax = schedule.theta, schedule.computing_axis.value
    ins = schedule.insertion
    base = ((cax, theta / T),) if ins is Insertion.CONSTANT_FIELD and theta != 0 else ()
    amp = math.pi / tau if tau > 0 else 0.0
    has_parity = seq.parity_axis is not PulseAxis.I
    axes = [a.value for a in seq.interior_axes] + ([seq.parity_axis.value] if has_parity else [])
    shift = tau / 2 if has_parity else 0.0
    bounds = np.concatenate([[0.0], T * np.cumsum(seq.intervals)])
    bounds[-1] = T
    out: list[Segment] = []

    def free(d: float):
        if d > TIME_TOL:
            out.append(Segment(d, base))

    def pulse(ax: str):
        if tau > 0:
            out.append(Segment(tau, base + ((ax, amp),)))
        else:
            out.append(Segment(0.0, (), (ax, math.pi)))

    def computing():
        if tau > 0:
            out.append(Segment(tau, base + ((cax, theta / tau),)))
        else:
            out.append(Segment(0.0, (), (cax, theta)))

    t = 0.0
    for j in range(len(seq.intervals)):
        # free time up to the start of the pulse closing interval j
        end = bounds[j + 1] - shift - tau / 2 if j < len(axes) else T
        if ins is Insertion.MID_CYCLE and j == schedule.mid_interval:
            start = t
            mid = (bounds[j] + bounds[j + 1]) / 2 - shift
            free(mid - tau / 2 - start)
            computing()
            free(end - (mid + tau / 2))
        else:
            free(end - t)
        if j < len(axes):
            pulse(axes[j])
            t = end + tau
    if ins is Insertion.AFTER_CYCLE:
        computing()
    return out


def schedule_segments(schedule: Schedule) -> list[Segment]:
    return cycle_segments(schedule) * schedule.n_cycles


# -- propagators -------------------------------------------------------------------------


class _Propagator:
    def __init__(self, model: Model):
        self.model = model
        self.n = model.n_sites

    def gate(self, psi: np.ndarray, axis: str, angle: float) -> np.ndarray:
        U = rotation(axis, angle)
        for q in range(self.model.n_qubits):
            psi = apply_local(psi, U, (q,), self.n)
        return psi

    def evolve(self, psi, duration, controls):  # pragma: no cover - interface
        raise NotImplementedError


class TrotterPropagator(_Propagator):
    """Second-order symmetric splitting over bond, interaction and control terms."""

    def __init__(self, model: Model, dt: float = 0.005, terms: list[LocalTerm] | None = None):
        super().__init__(model)
        if not DT_RANGE[0] <= dt <= DT_RANGE[1]:
            raise ValueError(f"dt={dt} outside the supported range {DT_RANGE}")
        self.dt = dt
        self.terms = list(model.bath_terms + model.interaction_terms) if terms is None else list(terms)
        self._cache: dict = {}

    def _step_gates(self, h: float, controls):
        key = (round(h, 15), controls)
        if key not in self._cache:
            terms = self.terms + [LocalTerm((q,), a * SPIN[PulseAxis(ax).index], "ctrl")
                                  for ax, a in controls for q in range(self.model.n_qubits)]
            half = [(sla.expm(-0.5j * h * t.matrix), t.sites) for t in terms[:-1]]
            last = (sla.expm(-1j * h * terms[-1].matrix), terms[-1].sites)
            self._cache[key] = half + [last] + half[::-1]
        return self._cache[key]

    def evolve(self, psi, duration, controls=()):
        if duration <= 0:
            return psi
        steps = max(1, math.ceil(duration / self.dt - 1e-9))
        gates = self._step_gates(duration / steps, controls)
        for _ in range(steps):
            for U, sites in gates:
                psi = apply_local(psi, U, sites, self.n)
        return psi


class ExactPropagator(_Propagator):
    """Matrix-exponential propagation under the piecewise-constant Hamiltonian."""

    def __init__(self, model: Model, dense_limit: int = DENSE_LIMIT):
        super().__init__(model)
        self.dense = model.cfg.dimension <= dense_limit
        self._cache: dict = {}

    def _hamiltonian(self, controls):
        if controls not in self._cache:
            H = model_hamiltonian(self.model, controls)
            self._cache[controls] = np.linalg.eigh(H.toarray()) if self.dense else H
        return self._cache[controls]

    def evolve(self, psi, duration, controls=()):
        if duration <= 0:
            return psi
        H = self._hamiltonian(controls)
        if self.dense:
            w, V = H
            phase = np.exp(-1j * duration * w)
            coeff = V.conj().T @ psi
            return V @ (phase[:, None] * coeff if psi.ndim == 2 else phase * coeff)
        return spla.expm_multiply(-1j * duration * H, psi)


def model_hamiltonian(model: Model, controls=()):
    H = model.H0
    for ax, a in controls:
        H = H + model.control(ax, a)
    return H.tocsr()


def make_propagator(model: Model, method: str = "trotter", dt: float = 0.005) -> _Propagator:
    if method == "trotter":
        return TrotterPropagator(model, dt)
    if method == "exact":
        return ExactPropagator(model)
    raise ValueError(f"unknown method {method!r}; use 'trotter' or 'exact'")


def _check_norm(psi: np.ndarray, t: float):
    drift = abs(np.linalg.norm(psi) - 1)
    if drift > NORM_TOL:
        raise NumericalError(f"norm drift {drift:.2e} at Jt={t:.6g} exceeds {NORM_TOL:g}")


def walk(psi: np.ndarray, segments, prop: _Propagator, sample_times, observe, t0: float = 0.0):
    """Propagate through segments, calling ``observe(psi, t)`` at each sample time.

    Instantaneous gates scheduled at time t act before a sample at t.
    """
    samples = sorted(float(s) for s in sample_times)
    out = []
    k = 0
    t = t0
    for seg in segments:
        if seg.gate is not None:
            psi = prop.gate(psi, *seg.gate)
            continue
        while k < len(samples) and samples[k] <= t + TIME_TOL:
            out.append(observe(psi, samples[k]))
            k += 1
        end = t + seg.duration
        while k < len(samples) and samples[k] < end - TIME_TOL:
            psi = prop.evolve(psi, samples[k] - t, seg.controls)
            t = samples[k]
            _check_norm(psi, t)
            out.append(observe(psi, t))
            k += 1
        psi = prop.evolve(psi, end - t, seg.controls)
        t = end
        _check_norm(psi, t)
    while k < len(samples) and samples[k] <= t + 1e-9:
        out.append(observe(psi, samples[k]))
        k += 1
    if k < len(samples):
        raise ValueError(f"sample time {samples[k]} lies beyond the schedule end {t}")
    return out, psi


def trotter_evolve(state: QuantumState, H_terms: list[LocalTerm], dt: float, steps: int,
                   model: Model) -> QuantumState:
    """``steps`` Strang steps of length dt under a list of local terms."""
    prop = TrotterPropagator(model, dt, H_terms)
    psi = prop.evolve(state.amplitudes, dt * steps)
    _check_norm(psi, state.time + dt * steps)
    return QuantumState(psi, state.time + dt * steps, state.n_qubits)


def evolve_sequence(state: QuantumState, schedule: Schedule, model: Model, sample_times=None,
                    method: str = "trotter", dt: float = 0.005) -> list[QuantumState]:
    """States at the requested times (default: every cycle boundary)."""
    if sample_times is None:
        sample_times = schedule.block_duration * np.arange(schedule.n_cycles + 1)
    prop = make_propagator(model, method, dt)
    states, _ = walk(state.amplitudes, schedule_segments(schedule), prop, sample_times,
                     lambda psi, t: QuantumState(psi.copy(), t, state.n_qubits))
    return states


def cycle_unitary(schedule: Schedule, model: Model, method: str = "exact", dt: float = 0.005) -> np.ndarray:
    """Dense propagator of one cycle block (small spaces only)."""
    dim = model.cfg.dimension
    if dim > DENSE_LIMIT:
        raise ValueError(f"dimension {dim} too large for a dense cycle propagator")
    prop = make_propagator(model, method, dt)
    U = np.eye(dim, dtype=complex)
    for seg in cycle_segments(schedule):
        U = prop.gate(U, *seg.gate) if seg.gate is not None else prop.evolve(U, seg.duration, seg.controls)
    return U


def initial_state(model: Model, qubit_state="+x", bath_state=None) -> QuantumState:
    """Product state of the qubit(s) with the bath ground state (or a given bath vector)."""
    if isinstance(qubit_state, str):
        vec = reduce(np.kron, [qubit_basis_state(qubit_state)] * model.n_qubits)
    else:
        vec = qubit_state
    return QuantumState(model.product_state(vec, bath_state), 0.0, model.n_qubits)


# -- stroboscopic runs --------------------------------------------------------------------


@dataclass
class PeriodicResult:
    times: np.ndarray
    rhos: list[ReducedDensity] = field(repr=False)
    norm_drift: np.ndarray = field(repr=False, default=None)

    def series(self, observable: str, initial=None) -> np.ndarray:
        ref = self.rhos[0] if initial is None else initial
        return np.array([observe(r, observable, ref) for r in self.rhos])


def observe(rho: ReducedDensity, observable: str, initial: ReducedDensity | None = None) -> float:
    if observable == "echo":
        return loschmidt_echo(rho, initial if initial is not None else 0.5)
    if observable == "sigma_z":
        return magnetization(rho)
    if observable == "concurrence":
        return concurrence(rho)
    raise ValueError(f"unknown observable {observable!r}")


def run_periodic(schedule: Schedule, model: Model, n_cycles: int | None = None, state: QuantumState | None = None,
                 method: str = "trotter", dt: float = 0.005, qubits=None) -> PeriodicResult:
    """Reduced densities at every cycle boundary t* = n * block, n = 0..n_cycles."""
    n = schedule.n_cycles if n_cycles is None else n_cycles
    if n < 1:
        raise ValueError("n_cycles must be at least 1")
    st = initial_state(model) if state is None else state
    psi = st.amplitudes
    rhos, drift = [], []

    def record(v):
        rhos.append(reduced_density(QuantumState(v, 0.0, st.n_qubits), qubits))
        drift.append(abs(np.linalg.norm(v) - 1))

    record(psi)
    if method == "exact" and model.cfg.dimension <= DENSE_LIMIT:
        U = cycle_unitary(schedule, model)
        for _ in range(n):
            psi = U @ psi
            _check_norm(psi, 0.0)
            record(psi)
    else:
        prop = make_propagator(model, method, dt)
        segs = cycle_segments(schedule)
        for _ in range(n):
            _, psi = walk(psi, segs, prop, (), None)
            record(psi)
    times = schedule.block_duration * np.arange(n + 1)
    return PeriodicResult(times, rhos, np.array(drift))


@dataclass(frozen=True)
class NopResult:
    n: int | None
    n_real: float | None

    @property
    def reached(self) -> bool:
        return self.n is not None

    def __str__(self):
        return f"N_op = {self.n} ({self.n_real:.3f})" if self.reached else "N_op not reached"


def half_crossing(values) -> NopResult:
    """First index where the series drops to half its initial value.

    The real-valued refinement interpolates linearly between the two
    bracketing samples. The first crossing wins if the series oscillates.
    """
    v = np.asarray(values, dtype=float)
    target = 0.5 * v[0]
    below = np.nonzero(v <= target)[0]
    if below.size == 0:
        return NopResult(None, None)
    n = int(below[0])
    if n == 0:
        return NopResult(0, 0.0)
    frac = (v[n - 1] - target) / (v[n - 1] - v[n])
    return NopResult(n, float(n - 1 + frac))


def n_op(schedule: Schedule, model: Model, observable: str = "echo", n_cycles: int = 200,
         method: str = "trotter", dt: float = 0.01) -> NopResult:
    """Cycles until the echo (qubit in |+x>) or concurrence (Bell pair) halves."""
    if observable == "echo":
        state = initial_state(model, "+x")
        qubits = (0,)
    elif observable == "concurrence":
        if model.n_qubits != 2:
            raise ValueError("concurrence needs two qubits")
        state = QuantumState(model.product_state(bell_state("phi+")), 0.0, 2)
        qubits = None
    else:
        raise ValueError(f"unknown observable {observable!r}")
    res = run_periodic(schedule, model, n_cycles, state, method, dt, qubits)
    return half_crossing(res.series(observable))


# -- suppression order ------------------------------------------------------------------


@dataclass(frozen=True)
class SlopeResult:
    slope: float
    T_grid: np.ndarray = field(repr=False)
    deltas: np.ndarray = field(repr=False)


def _block_difference(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """expm(A) - expm(C) without cancellation, from the upper-right block of a 2x2 block exponential."""
    d = A.shape[0]
    big = np.zeros((2 * d, 2 * d), dtype=complex)
    big[:d, :d] = A
    big[:d, d:] = A - C
    big[d:, d:] = C
    return sla.expm(big)[:d, d:]


def cycle_deviation(seq: DDSequence, model: Model, T: float) -> np.ndarray:
    """G(T) - 1 with G = exp(i H_bath T) U0(T) for an ideal-pulse cycle.

    Computed in the toggling frame: each free interval evolves under
    H_bath + eps * sum_mu f_mu sigma^mu S^mu, which takes the pulse product
    to be exactly the identity. The deviation is accumulated factor by
    factor so that its smallness does not drown in rounding error.
    """
    cfg = model.cfg
    hist = sign_history(seq.with_period(T, 0.0))
    Hb = model.H_bath.toarray()
    wb, Vb = np.linalg.eigh(Hb)

    def bath_prop(t):
        return (Vb * np.exp(-1j * t * wb)) @ Vb.conj().T

    dim = Hb.shape[0]
    X = np.zeros((dim, dim), dtype=complex)
    bounds = hist.boundaries
    for j in range(hist.signs.shape[1]):
        f = hist.signs[:, j]
        signs = [f] * cfg.n_qubits
        V = _sum_terms(interaction_terms(cfg, signs), cfg.n_sites).toarray()
        w = bounds[j + 1] - bounds[j]
        Dp = _block_difference(-1j * w * (Hb + V), -1j * w * Hb)
        D = bath_prop(-bounds[j + 1]) @ Dp @ bath_prop(bounds[j])
        X = D + X + D @ X
    return X


def deviation_norm(X: np.ndarray, n_qubits: int, norm: str = "spectral", component: str = "full") -> float:
    """Norm of G - 1, or of its part that acts non-trivially on the qubits."""
    if component == "qubit":
        dq = 2 ** n_qubits
        db = X.shape[0] // dq
        blocks = X.reshape(dq, db, dq, db)
        bath_part = np.einsum("ibic->bc", blocks) / dq
        X = X - np.kron(np.eye(dq), bath_part)
    elif component != "full":
        raise ValueError("component must be 'full' or 'qubit'")
    if norm == "spectral":
        return float(np.linalg.norm(X, 2))
    if norm == "frobenius":
        return float(np.linalg.norm(X, "fro"))
    raise ValueError("norm must be 'spectral' or 'frobenius'")


def suppression_slope(seq: DDSequence, model: Model, T_grid, norm: str = "spectral",
                      component: str = "full") -> SlopeResult:
    """Log-log slope of ||exp(i H_bath T) U0(T) - 1|| against T.

    ``component="qubit"`` drops the part of the deviation that acts as the
    identity on the qubits (pure bath dynamics).
    """
    T = np.asarray(T_grid, dtype=float)
    if T.size < 2 or np.any(T <= 0):
        raise ValueError("need at least two positive periods")
    if math.log10(T.max() / T.min()) < 0.5:
        raise ValueError("T grid must span at least half a decade")
    if model.cfg.dimension > 2 ** 10:
        raise ValueError("suppression_slope needs a small system (dense evolution operators)")
    d = np.array([deviation_norm(cycle_deviation(seq, model, t), model.n_qubits, norm, component) for t in T])
    slope = np.polyfit(np.log(T), np.log(d), 1)[0]
    return SlopeResult(float(slope), T, d)


# -- trajectory output ---------------------------------------------------------------------

TRAJECTORY_HEADER = ("t", "L", "sigma_z", "concurrence", "trace_distance", "norm_drift")


def trajectory_row(state: QuantumState, initial: ReducedDensity | None = None,
                   target: ReducedDensity | None = None) -> tuple[float, ...]:
    """Observables of one sample; entries that do not apply are NaN.

    With two qubits, L and sigma_z refer to the first qubit.
    """
    rho_all = reduced_density(state)
    rho1 = reduced_density(state, (0,))
    ref = initial if initial is not None else 0.5
    if isinstance(ref, ReducedDensity) and ref.dim == 4:
        ref = ReducedDensity(np.einsum("ibjb->ij", ref.matrix.reshape(2, 2, 2, 2)))
    echo = loschmidt_echo(rho1, ref)
    conc = concurrence(rho_all) if state.n_qubits == 2 else math.nan
    dist = trace_distance(rho_all, target) if target is not None else math.nan
    return (state.time, echo, magnetization(rho1), conc, dist, abs(state.norm - 1))


def format_float(x: float) -> str:
    return "nan" if math.isnan(x) else f"{x:.12e}"


def write_trajectory(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRAJECTORY_HEADER)
        for r in rows:
            w.writerow([format_float(float(v)) for v in r])
