"""Free-fermion oracle for a qubit with Ising coupling to an open XX chain.

After a Jordan-Wigner transformation the chain is a tight-binding model
with hopping J/2, and the qubit only shifts the energy of one site. For a
qubit in sigma_z = +-1 the single-particle matrices are

    H(+-) = hopping  +-  eps * c * n_site

with ``c`` the qubit spin factor of the many-body model (1 for the Ising
convention used there). The echo of a Slater-determinant bath state with
correlation matrix r is then

    L(t) = |det[1 + r (exp(i t H-) exp(-i t H+) - 1)]|**2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

ZERO_MODE_TOL = 1e-12


def hopping_matrix(L: int, J: float = 1.0) -> np.ndarray:
    """Open-chain tight-binding matrix of J (Sx Sx + Sy Sy): hopping J/2."""
    h = np.zeros((L, L))
    idx = np.arange(L - 1)
    h[idx, idx + 1] = h[idx + 1, idx] = J / 2
    return h


def single_particle_matrices(L: int, J: float, epsilon: float, site: int,
                             spin_factor: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """(H+, H-) for qubit sigma_z = +1 and -1."""
    if not 0 <= site < L:
        raise ValueError(f"site {site} outside chain of length {L}")
    h = hopping_matrix(L, J)
    shift = epsilon * spin_factor
    hp, hm = h.copy(), h.copy()
    hp[site, site] += shift
    hm[site, site] -= shift
    return hp, hm


@dataclass(frozen=True)
class CorrelationMatrix:
    r: np.ndarray
    n_particles: int


def correlation_matrix(h_ref: np.ndarray) -> CorrelationMatrix:
    """<c_i^dagger c_j> of the Fermi sea of ``h_ref`` (all negative modes filled).

    An exact zero mode makes the filling ambiguous and is rejected; use an
    even chain length.
    """
    e, v = np.linalg.eigh(h_ref)
    if np.any(np.abs(e) < ZERO_MODE_TOL):
        raise ValueError("zero-energy mode at the Fermi level; use an even chain length")
    occ = v[:, e < 0]
    return CorrelationMatrix(occ @ occ.conj().T, occ.shape[1])


def loschmidt_det(r, h_plus: np.ndarray, h_minus: np.ndarray, t: float) -> float:
    """Echo L(t) from the determinant formula."""
    if t < 0:
        raise ValueError("time must be non-negative")
    rr = r.r if isinstance(r, CorrelationMatrix) else np.asarray(r)
    w = sla.expm(1j * t * h_minus) @ sla.expm(-1j * t * h_plus)
    d = np.linalg.det(np.eye(rr.shape[0]) + rr @ (w - np.eye(rr.shape[0])))
    return float(abs(d) ** 2)


def echo_curve(L: int, epsilon: float, times, site: int | None = None, J: float = 1.0,
               spin_factor: float = 1.0, reference: str = "free") -> np.ndarray:
    """L(t) on a grid of times.

    ``reference`` picks the bath state: ``"free"`` is the ground state of
    the uncoupled chain (the product initial state), ``"minus"`` the ground
    state of H-.
    """
    site = L // 2 if site is None else site
    hp, hm = single_particle_matrices(L, J, epsilon, site, spin_factor)
    if reference == "free":
        h_ref = hopping_matrix(L, J)
    elif reference == "minus":
        h_ref = hm
    else:
        raise ValueError("reference must be 'free' or 'minus'")
    r = correlation_matrix(h_ref)
    # diagonalize once and reuse for every t
    ep, vp = np.linalg.eigh(hp)
    em, vm = np.linalg.eigh(hm)
    eye = np.eye(L)
    out = []
    for t in np.asarray(times, dtype=float):
        w = (vm * np.exp(1j * t * em)) @ vm.T @ (vp * np.exp(-1j * t * ep)) @ vp.T
        out.append(abs(np.linalg.det(eye + r.r @ (w - eye))) ** 2)
    return np.array(out)


def short_time_alpha(epsilon: float, spin_factor: float = 1.0) -> float:
    """Coefficient of L(t) ~ exp(-alpha t**2) at short times: (eps * c)**2 at half filling."""
    return float((epsilon * spin_factor) ** 2)


def fit_alpha(times, echo, t_max: float = 0.1) -> float:
    """Least-squares alpha in -ln L = alpha t**2 over 0 < t < t_max."""
    t = np.asarray(times, dtype=float)
    y = -np.log(np.asarray(echo, dtype=float))
    mask = (t > 0) & (t < t_max + 1e-12)
    t2 = t[mask] ** 2
    return float(np.dot(y[mask], t2) / np.dot(t2, t2))


def ground_energy(L: int, J: float = 1.0) -> float:
    """Many-body ground energy of the open XX chain: sum of negative single-particle energies."""
    e = np.linalg.eigvalsh(hopping_matrix(L, J))
    return float(e[e < 0].sum())
