"""Closed-form moments of toggling sign histories and the constraint systems built from them.

All functionals are polynomials in the interval widths, so values and
Jacobians are exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
import numpy as np

from .types import DDSequence, PulseAxis, SignHistory, _axis_index, parse_axes, sign_history, sign_table

CROSS_PAIRS = ((0, 1), (0, 2), (1, 2))
SAME_PAIRS = ((0, 0), (1, 1), (2, 2))


def moment(h: SignHistory, axis, k: int) -> float:
    """k-th time moment of f_axis: the integral of t**k f(t) over [0, T]."""
    if k < 0:
        raise ValueError("moment order must be non-negative")
    mu = _axis_index(axis)
    s = h.boundaries
    p = np.diff(s ** (k + 1)) / (k + 1)
    return float(np.dot(h.signs[mu], p))


def _mixed_from_widths(w: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    c = np.cumsum(w) - w / 2
    # rectangle terms l < j: w_j w_l (c_j - c_l)(a_j b_l + a_l b_j)
    dc = c[:, None] - c[None, :]
    pair = np.outer(a, b) + np.outer(b, a)
    rect = np.tril(np.outer(w, w) * dc * pair, k=-1).sum()
    tri = np.sum(w ** 3 * a * b) / 3.0
    return float(rect + tri)


def mixed_moment(h: SignHistory, mu, nu, *, allow_same: bool = False) -> float:
    """Double integral of (t1 - t2)[f_mu(t1) f_nu(t2) + f_mu(t2) f_nu(t1)] over t2 < t1 < T.

    The mu == nu case carries no qubit dynamics for spin-1/2 and is rejected
    unless ``allow_same`` is set.
    """
    i, j = _axis_index(mu), _axis_index(nu)
    if i == j and not allow_same:
        raise ValueError("mixed moment needs two distinct axes")
    return _mixed_from_widths(h.widths, h.signs[i], h.signs[j])


# -- constraint system -------------------------------------------------------


def _moment_row(s: np.ndarray, sig: np.ndarray, k: int):
    """Value and d/dalpha of a k-th moment for boundaries s (s[0]=0, s[-1]=T)."""
    K = sig.size
    value = float(np.dot(sig, np.diff(s ** (k + 1)))) / (k + 1)
    # moment = sum_b s_b^{k+1} (sig_{b-1} - sig_b) / (k+1), sig_K = 0
    jump = sig - np.append(sig[1:], 0.0)
    dsb = s[1:] ** k * jump  # d/ds_b for b=1..K
    # s_b depends on alpha_i for i < b
    grad = np.cumsum(dsb[::-1])[::-1]
    assert grad.size == K
    return value, grad


def _mixed_row(w: np.ndarray, a: np.ndarray, b: np.ndarray):
    value = _mixed_from_widths(w, a, b)
    K = w.size
    P = np.outer(a, b) + np.outer(b, a)
    # G[l, j] = sum of widths strictly between l and j (l < j)
    cs = np.concatenate([[0.0], np.cumsum(w)])
    grad = np.zeros(K)
    for j in range(K):
        for l in range(j):
            gap = cs[j] - cs[l + 1]
            pj = P[j, l]
            if pj == 0.0:
                continue
            # term = pj * w_j w_l ((w_j + w_l)/2 + gap)
            grad[j] += pj * w[l] * ((w[j] + w[l]) / 2 + gap) + pj * w[j] * w[l] / 2
            grad[l] += pj * w[j] * ((w[j] + w[l]) / 2 + gap) + pj * w[j] * w[l] / 2
            if j - l > 1:
                grad[l + 1:j] += pj * w[j] * w[l]
    grad += w ** 2 * a * b
    return value, grad


@dataclass(frozen=True)
class ConstraintSystem:
    """Moment conditions that cancel the toggled coupling through a given order.

    order 1: zeroth moments of f_x, f_y, f_z plus normalization.
    order 2: adds first moments.
    order 3: adds second moments and the three cross-axis mixed moments
    (and the same-axis ones when ``include_same_axis`` is set, which only
    matters for qubits with spin above 1/2).
    """

    order_m: int
    axes: tuple[PulseAxis, ...]
    include_same_axis: bool = False

    def __post_init__(self):
        if self.order_m not in (1, 2, 3):
            raise ValueError("order must be 1, 2 or 3")
        object.__setattr__(self, "axes", parse_axes(self.axes))

    @property
    def unknown_count(self) -> int:
        return len(self.axes) + 1

    @property
    def labels(self) -> list[str]:
        out = ["sum"]
        for k in range(self.order_m):
            out += [f"m{k}_{ax}" for ax in "xyz"]
        if self.order_m >= 3:
            pairs = CROSS_PAIRS + (SAME_PAIRS if self.include_same_axis else ())
            out += [f"mix_{'xyz'[i]}{'xyz'[j]}" for i, j in pairs]
        return out

    @property
    def equation_count(self) -> int:
        return len(self.labels)

    def residuals(self, alphas, with_jacobian: bool = False):
        """Residual vector (and Jacobian) at interval fractions ``alphas`` with T=1."""
        w = np.asarray(alphas, dtype=float)
        sig = sign_table(self.axes)
        s = np.concatenate([[0.0], np.cumsum(w)])
        rows, grads = [w.sum() - 1.0], [np.ones_like(w)]
        for k in range(self.order_m):
            for mu in range(3):
                v, g = _moment_row(s, sig[mu], k)
                rows.append(v)
                grads.append(g)
        if self.order_m >= 3:
            pairs = CROSS_PAIRS + (SAME_PAIRS if self.include_same_axis else ())
            for i, j in pairs:
                v, g = _mixed_row(w, sig[i], sig[j])
                rows.append(v)
                grads.append(g)
        r = np.array(rows)
        if with_jacobian:
            return r, np.array(grads)
        return r


def moment_report(seq: DDSequence, max_order: int = 3) -> dict[str, float]:
    """All moment functionals through ``max_order`` for a sequence, labelled."""
    h = sign_history(seq)
    out = {}
    for k in range(max_order):
        for ax in "xyz":
            out[f"m{k}_{ax}"] = moment(h, ax, k)
    if max_order >= 3:
        for i, j in CROSS_PAIRS:
            out[f"mix_{'xyz'[i]}{'xyz'[j]}"] = mixed_moment(h, i, j)
    return out


def verify_order(seq: DDSequence, tol: float | None = None) -> int:
    """Largest order m in {0, 1, 2, 3} whose constraints all hold.

    The k-th moment must vanish within ``tol * T**(k+1)`` and mixed moments
    within ``tol * T**3``. The default tolerance is ``seq.moment_tol``.
    """
    tol = seq.moment_tol if tol is None else tol
    T = seq.period_T
    h = sign_history(seq)
    order = 0
    for k in range(3):
        ok = all(abs(moment(h, ax, k)) <= tol * T ** (k + 1) for ax in "xyz")
        if k == 2:
            ok = ok and all(abs(mixed_moment(h, i, j)) <= tol * T ** 3 for i, j in CROSS_PAIRS)
        if not ok:
            break
        order = k + 1
    return order


def numeric_moment(h: SignHistory, axis, k: int) -> float:
    """Adaptive quadrature of t**k f(t), piece by piece (test oracle)."""
    from scipy.integrate import quad

    mu = _axis_index(axis)
    total = 0.0
    for a, b in itertools.pairwise(h.boundaries):
        val, _ = quad(lambda t: t ** k, a, b, epsabs=1e-14, epsrel=1e-13)
        total += float(h(0.5 * (a + b), mu)) * val
    return total


def numeric_mixed_moment(h: SignHistory, mu, nu) -> float:
    """2-D adaptive quadrature of the mixed-moment integrand (test oracle).

    The simplex is split along the sign-change boundaries so that each
    quadrature cell sees a smooth integrand; signs are read by evaluating
    the history, not from its sign table.
    """
    from scipy.integrate import dblquad

    i, j = _axis_index(mu), _axis_index(nu)

    def integrand(t2, t1):
        return (t1 - t2) * (h(t1, i) * h(t2, j) + h(t2, i) * h(t1, j))

    b = h.boundaries
    total = 0.0
    for p in range(len(b) - 1):
        for q in range(p + 1):
            t1a, t1b, t2a = b[p], b[p + 1], b[q]
            t2b = b[q + 1] if q < p else (lambda t1: t1)
            val, _ = dblquad(integrand, t1a, t1b, t2a, t2b, epsabs=1e-14, epsrel=1e-12)
            total += val
    return float(total)
