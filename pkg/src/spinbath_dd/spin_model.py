"""Qubits coupled to an open XXZ spin-1/2 chain.

Tensor-factor order is ``qubits..., chain site 0, ..., chain site L-1`` and
basis state 0 is spin up (sigma_z = +1). Energies are in units of J.

Coupling conventions (see ``qubit_spin_factor``):

* Heisenberg: ``eps * s_q . S_i`` with ``s = sigma / 2``.
* IsingZ: ``eps * sigma^z_q S^z_i``, i.e. the qubit enters through its
  +-1 eigenvalue. With this convention the short-time free decay of the
  echo is ``exp(-eps**2 t**2)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from functools import cached_property, reduce
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .sequence_design import PulseAxis

MAX_SITES = 20
DENSE_LIMIT = 1024

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID2 = np.eye(2, dtype=complex)
PAULI = (SX, SY, SZ)
SPIN = tuple(p / 2 for p in PAULI)


class Coupling(str, enum.Enum):
    ISING = "ising"
    HEISENBERG = "heisenberg"

    @classmethod
    def parse(cls, value) -> "Coupling":
        if isinstance(value, Coupling):
            return value
        v = str(value).strip().lower()
        aliases = {"isingz": "ising", "ising_z": "ising", "xxx": "heisenberg"}
        return cls(aliases.get(v, v))


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


@dataclass(frozen=True)
class ModelConfig:
    """Chain, coupling and qubit placement.

    ``J`` is the internal energy unit (keep it 1); ``J_meV`` only enters the
    conversion from a laboratory field to a pulse width.
    """

    L: int = 8
    J: float = 1.0
    delta: float = 0.0
    coupling: Coupling = Coupling.HEISENBERG
    epsilon: float = -0.3
    qubit_sites: tuple[int, ...] = ()
    boundary: str = "open"
    J_meV: float = 1.0
    qubit_spin_factor: float | None = None
    max_sites: int = MAX_SITES

    def __post_init__(self):
        object.__setattr__(self, "coupling", Coupling.parse(self.coupling))
        sites = tuple(int(s) for s in self.qubit_sites) or (self.L // 2,)
        object.__setattr__(self, "qubit_sites", sites)
        if self.L < 2:
            raise ConfigError("chain needs at least two sites", "L")
        if abs(self.delta) >= 1:
            raise ConfigError("only the XY regime |delta| < 1 is supported", "delta")
        if len(sites) not in (1, 2):
            raise ConfigError("one or two qubits are supported", "qubit_sites")
        if len(set(sites)) != len(sites):
            raise ConfigError("qubit sites must be distinct", "qubit_sites")
        if any(not 0 <= s < self.L for s in sites):
            raise ConfigError(f"qubit sites must lie in [0, {self.L - 1}]", "qubit_sites")
        if self.boundary != "open":
            raise ConfigError("only open boundaries are supported", "boundary")
        if self.L > self.max_sites:
            raise ConfigError(f"L={self.L} exceeds the exact-evolution cap of {self.max_sites} sites", "L")
        if self.J_meV <= 0:
            raise ConfigError("J_meV must be positive", "J_meV")

    @property
    def n_qubits(self) -> int:
        return len(self.qubit_sites)

    @property
    def n_sites(self) -> int:
        return self.L + self.n_qubits

    @property
    def dimension(self) -> int:
        return 2 ** self.n_sites

    @property
    def spin_factor(self) -> float:
        if self.qubit_spin_factor is not None:
            return float(self.qubit_spin_factor)
        return 1.0 if self.coupling is Coupling.ISING else 0.5

    def with_(self, **changes) -> "ModelConfig":
        return replace(self, **changes)


def adjacent_pair(L: int) -> tuple[int, int]:
    return (L // 2 - 1, L // 2)


def separated_pair(L: int) -> tuple[int, int]:
    return (L // 4, (3 * L) // 4)


# -- config files -------------------------------------------------------------

_CONFIG_KEYS = {
    "L": int, "J": float, "delta": float, "coupling": str, "epsilon": float,
    "qubit_sites": str, "boundary": str, "J_meV": float, "qubit_spin_factor": float,
}


def parse_config_text(text: str, source: str = "<config>") -> ModelConfig:
    """Flat ``key = value`` model file; errors name the offending line."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            if key == "qubit_sites":
                parsed = tuple(int(v) for v in val.replace(",", " ").split())
            elif key == "coupling":
                parsed = Coupling.parse(val)
            else:
                parsed = _CONFIG_KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
        values[key] = parsed
        lines[key] = lineno
    try:
        return ModelConfig(**values)
    except ConfigError as exc:
        where = f"{source}:{lines[exc.key]}" if exc.key in lines else source
        raise ConfigError(f"{where}: {exc}", exc.key) from None


def load_config(path) -> ModelConfig:
    p = Path(path)
    return parse_config_text(p.read_text(), str(p))


def config_to_text(cfg: ModelConfig) -> str:
    out = [f"L = {cfg.L}", f"J = {cfg.J!r}", f"delta = {cfg.delta!r}", f"coupling = {cfg.coupling.value}",
           f"epsilon = {cfg.epsilon!r}", "qubit_sites = " + ", ".join(map(str, cfg.qubit_sites)),
           f"boundary = {cfg.boundary}", f"J_meV = {cfg.J_meV!r}"]
    if cfg.qubit_spin_factor is not None:
        out.append(f"qubit_spin_factor = {cfg.qubit_spin_factor!r}")
    return "\n".join(out) + "\n"


# -- local terms and sparse embedding ----------------------------------------


@dataclass(frozen=True)
class LocalTerm:
    """A Hermitian operator acting on a few tensor factors."""

    sites: tuple[int, ...]
    matrix: np.ndarray = field(repr=False)
    kind: str = ""


def _site_product(ops: dict[int, np.ndarray], n_sites: int) -> sp.csr_matrix:
    """Sparse kron of single-site operators, identity elsewhere."""
    out = sp.identity(1, format="csr", dtype=complex)
    run = 0
    for s in range(n_sites):
        if s in ops:
            if run:
                out = sp.kron(out, sp.identity(2 ** run, format="csr", dtype=complex), format="csr")
                run = 0
            out = sp.kron(out, sp.csr_matrix(ops[s]), format="csr")
        else:
            run += 1
    if run:
        out = sp.kron(out, sp.identity(2 ** run, format="csr", dtype=complex), format="csr")
    return out


_BASIS = (ID2, SX, SY, SZ)


def embed(term: LocalTerm, n_sites: int) -> sp.csr_matrix:
    """Sparse matrix of a local term on the full 2**n_sites space.

    The term is expanded in Pauli strings so that non-adjacent factors never
    require a dense block spanning the sites in between.
    """
    k = len(term.sites)
    if k == 1:
        return _site_product({term.sites[0]: term.matrix}, n_sites)
    dim = 2 ** n_sites
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for idx in np.ndindex(*([4] * k)):
        string = reduce(np.kron, [_BASIS[i] for i in idx])
        coef = np.trace(string.conj().T @ term.matrix) / 2 ** k
        if abs(coef) < 1e-15:
            continue
        total = total + coef * _site_product(dict(zip(term.sites, (_BASIS[i] for i in idx))), n_sites)
    return total.tocsr()


def bath_terms(cfg: ModelConfig) -> list[LocalTerm]:
    off = cfg.n_qubits
    bond = cfg.J * (np.kron(SPIN[0], SPIN[0]) + np.kron(SPIN[1], SPIN[1])
                    + cfg.delta * np.kron(SPIN[2], SPIN[2]))
    return [LocalTerm((off + n, off + n + 1), bond, "bath") for n in range(cfg.L - 1)]


def interaction_terms(cfg: ModelConfig, signs=None) -> list[LocalTerm]:
    """Qubit-chain coupling; ``signs[q][mu]`` optionally toggles each qubit Pauli axis."""
    c = cfg.epsilon * cfg.spin_factor
    axes = (2,) if cfg.coupling is Coupling.ISING else (0, 1, 2)
    out = []
    for q, site in enumerate(cfg.qubit_sites):
        f = np.ones(3) if signs is None else np.asarray(signs[q], dtype=float)
        mat = sum(f[mu] * c * np.kron(PAULI[mu], SPIN[mu]) for mu in axes)
        out.append(LocalTerm((q, cfg.n_qubits + site), mat, "int"))
    return out


def control_matrix(axis: PulseAxis | str, amplitude: float) -> np.ndarray:
    ax = PulseAxis.parse(axis)
    if ax is PulseAxis.I:
        return np.zeros((2, 2), dtype=complex)
    return amplitude * SPIN[ax.index]


def _sum_terms(terms, n_sites: int) -> sp.csr_matrix:
    dim = 2 ** n_sites
    total = sp.csr_matrix((dim, dim), dtype=complex)
    for t in terms:
        total = total + embed(t, n_sites)
    return total.tocsr()


def build_bath(cfg: ModelConfig) -> sp.csr_matrix:
    """J sum_n (Sx Sx + Sy Sy + delta Sz Sz) on the chain, identity on the qubits."""
    return _sum_terms(bath_terms(cfg), cfg.n_sites)


def build_interaction(cfg: ModelConfig) -> sp.csr_matrix:
    return _sum_terms(interaction_terms(cfg), cfg.n_sites)


def build_control(axis: PulseAxis | str, qubit_index: int, amplitude: float, cfg: ModelConfig) -> sp.csr_matrix:
    """A * s.n on one qubit. A pi rotation needs A * tau_p = pi."""
    if not 0 <= qubit_index < cfg.n_qubits:
        raise ConfigError(f"qubit index {qubit_index} out of range")
    return embed(LocalTerm((qubit_index,), control_matrix(axis, amplitude), "ctrl"), cfg.n_sites)


def build_chain_only(cfg: ModelConfig) -> sp.csr_matrix:
    bond = cfg.J * (np.kron(SPIN[0], SPIN[0]) + np.kron(SPIN[1], SPIN[1])
                    + cfg.delta * np.kron(SPIN[2], SPIN[2]))
    return _sum_terms([LocalTerm((n, n + 1), bond) for n in range(cfg.L - 1)], cfg.L)


def total_sz(n_sites: int, sites=None) -> sp.csr_matrix:
    sites = range(n_sites) if sites is None else sites
    return _sum_terms([LocalTerm((s,), SPIN[2]) for s in sites], n_sites)


def qubit_operator(op: np.ndarray, qubit_index: int, cfg: ModelConfig) -> sp.csr_matrix:
    return embed(LocalTerm((qubit_index,), op), cfg.n_sites)


# -- bath eigenstates -------------------------------------------------------


class EigensolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BathEigenpair:
    energy: float
    state: np.ndarray = field(repr=False)


def ground_state(cfg: ModelConfig, n_states: int = 1) -> list[BathEigenpair]:
    """Lowest eigenpairs of the chain-only Hamiltonian, sorted by energy."""
    if n_states < 1:
        raise ValueError("n_states must be at least 1")
    H = build_chain_only(cfg)
    dim = H.shape[0]
    if dim <= DENSE_LIMIT:
        w, v = np.linalg.eigh(H.toarray())
    else:
        try:
            w, v = spla.eigsh(H, k=min(n_states + 2, dim - 2), which="SA", tol=1e-12, maxiter=20 * dim)
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(str(exc)) from None
        order = np.argsort(w)
        w, v = w[order], v[:, order]
    out = []
    for k in range(n_states):
        vec = v[:, k] / np.linalg.norm(v[:, k])
        # fix the global phase so results are reproducible
        j = np.argmax(np.abs(vec))
        vec = vec * np.exp(-1j * np.angle(vec[j]))
        out.append(BathEigenpair(float(w[k]), vec))
    return out


def pulse_width_from_field(J_meV: float, B_tesla: float) -> float:
    """Dimensionless J*tau_p of a pi pulse driven by a field B: 10 pi J[meV] / B[T]."""
    if B_tesla <= 0:
        raise ValueError("field must be positive")
    return 10.0 * math.pi * J_meV / B_tesla


# -- assembled model -----------------------------------------------------------


class Model:
    """Operators and local terms for one configuration, built once and reused."""

    def __init__(self, cfg: ModelConfig):
        self.cfg = cfg
        self.n_sites = cfg.n_sites
        self.n_qubits = cfg.n_qubits

    @cached_property
    def bath_terms(self) -> list[LocalTerm]:
        return bath_terms(self.cfg)

    @cached_property
    def interaction_terms(self) -> list[LocalTerm]:
        return interaction_terms(self.cfg)

    @cached_property
    def H_bath(self) -> sp.csr_matrix:
        return build_bath(self.cfg)

    @cached_property
    def H_int(self) -> sp.csr_matrix:
        return build_interaction(self.cfg)

    @cached_property
    def H0(self) -> sp.csr_matrix:
        return (self.H_bath + self.H_int).tocsr()

    def control(self, axis, amplitude: float) -> sp.csr_matrix:
        """The same control field applied to every qubit."""
        ops = [build_control(axis, q, amplitude, self.cfg) for q in range(self.n_qubits)]
        return reduce(lambda a, b: a + b, ops).tocsr()

    def control_terms(self, axis, amplitude: float) -> list[LocalTerm]:
        mat = control_matrix(axis, amplitude)
        return [LocalTerm((q,), mat, "ctrl") for q in range(self.n_qubits)]

    def bath_states(self, n_states: int = 2) -> list[BathEigenpair]:
        return ground_state(self.cfg, n_states)

    @cached_property
    def bath_ground(self) -> BathEigenpair:
        return ground_state(self.cfg, 1)[0]

    def product_state(self, qubit_state, bath_state: np.ndarray | None = None) -> np.ndarray:
        """|g> (x) |bath>, with the bath ground state by default."""
        g = np.asarray(qubit_state, dtype=complex).ravel()
        if g.size != 2 ** self.n_qubits:
            raise ValueError(f"qubit state needs {2 ** self.n_qubits} amplitudes")
        b = self.bath_ground.state if bath_state is None else np.asarray(bath_state, dtype=complex)
        psi = np.kron(g / np.linalg.norm(g), b)
        return psi


def qubit_basis_state(label: str) -> np.ndarray:
    """Single-qubit states by name: up, down, +x, -x, +y, -y."""
    s = 1 / math.sqrt(2)
    table = {
        "up": [1, 0], "+z": [1, 0], "0": [1, 0],
        "down": [0, 1], "-z": [0, 1], "1": [0, 1],
        "+x": [s, s], "-x": [s, -s], "+y": [s, 1j * s], "-y": [s, -1j * s],
    }
    try:
        return np.array(table[label], dtype=complex)
    except KeyError:
        raise ValueError(f"unknown qubit state {label!r}") from None


def bell_state(kind: str = "phi+") -> np.ndarray:
    s = 1 / math.sqrt(2)
    table = {"phi+": [s, 0, 0, s], "phi-": [s, 0, 0, -s], "psi+": [0, s, s, 0], "psi-": [0, s, -s, 0]}
    return np.array(table[kind], dtype=complex)
