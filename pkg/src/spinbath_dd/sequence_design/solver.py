"""Multi-start damped Newton solver for the interval constraint systems."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .moments import ConstraintSystem
from .types import CYCLIC_RELABEL, DDSequence, PulseAxis, normalized, parse_axes, parity_pulse

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
DEDUP_TOL = 1e-6


@dataclass(frozen=True)
class SolverConfig:
    n_starts: int = 200
    seed: int = 20100101
    max_iter: int = 100
    residual_tol: float = RESIDUAL_TOL
    dedup_tol: float = DEDUP_TOL
    include_same_axis: bool = False


class NonConvergenceError(RuntimeError):
    """No start of the multi-start solver produced a finite iterate."""


def newton_polish(system: ConstraintSystem, x0, max_iter: int = 100, tol: float = 1e-14):
    """Damped Newton on the square system; returns (x, residual_inf_norm).

    Steps are halved until the iterate stays positive and the residual
    norm decreases. Least squares is used so singular Jacobians do not stop
    the iteration.
    """
    x = np.asarray(x0, dtype=float).copy()
    r, Jm = system.residuals(x, with_jacobian=True)
    norm = np.linalg.norm(r)
    for _ in range(max_iter):
        if np.max(np.abs(r)) < tol:
            break
        step = np.linalg.lstsq(Jm, -r, rcond=None)[0]
        lam = 1.0
        while lam > 1e-6:
            trial = x + lam * step
            if trial.min() > 0:
                r_t = system.residuals(trial)
                n_t = np.linalg.norm(r_t)
                if n_t < norm or n_t < tol:
                    break
            lam *= 0.5
        else:
            break
        x = trial
        r, Jm = system.residuals(x, with_jacobian=True)
        norm = np.linalg.norm(r)
    return x, float(np.max(np.abs(r)))


def solve_intervals(order_m: int, axis_pattern, seeds: SolverConfig | None = None) -> list[DDSequence]:
    """All positive interval vectors satisfying the order-m constraints for a pulse pattern.

    Starts are drawn uniformly from the simplex. Returned sequences are
    deduplicated in the L-infinity norm and sorted lexicographically by
    their intervals. An infeasible pattern gives an empty list.
    """
    cfg = seeds or SolverConfig()
    axes = parse_axes(axis_pattern)
    system = ConstraintSystem(order_m, axes, cfg.include_same_axis)
    if system.equation_count != system.unknown_count:
        raise ValueError(
            f"order {order_m} needs {system.equation_count - 1} interior pulses, got {len(axes)}")
    rng = np.random.default_rng(cfg.seed)
    starts = rng.dirichlet(np.ones(system.unknown_count), size=cfg.n_starts)
    found: list[np.ndarray] = []
    n_failed = 0
    for x0 in starts:
        x, res = newton_polish(system, x0, cfg.max_iter)
        if not np.all(np.isfinite(x)):
            n_failed += 1
            continue
        if res >= cfg.residual_tol or x.min() <= 0:
            continue
        if any(np.max(np.abs(x - y)) < cfg.dedup_tol for y in found):
            continue
        found.append(x)
    if n_failed == cfg.n_starts:
        raise NonConvergenceError(f"all {cfg.n_starts} starts diverged for {''.join(a.value for a in axes)}")
    log.info("order %d pattern %s: %d distinct solutions from %d starts",
             order_m, "".join(a.value for a in axes), len(found), cfg.n_starts)
    found.sort(key=tuple)
    return [DDSequence(axes, normalized(x), name=f"m{order_m}_{''.join(a.value for a in axes)}")
            for x in found]


def refine(seq: DDSequence, order_m: int) -> DDSequence:
    """Polish a sequence given to a few digits onto the exact constraint solution nearby."""
    system = ConstraintSystem(order_m, seq.interior_axes)
    x, res = newton_polish(system, seq.intervals)
    if res >= RESIDUAL_TOL:
        raise NonConvergenceError(f"refinement of {seq.name or seq.axes_string} stalled at residual {res:.2e}")
    return DDSequence(seq.interior_axes, normalized(x), seq.parity_axis, seq.period_T,
                      seq.pulse_width_tau_p, 1e-8, seq.name)


def canonical_pattern(axes: str) -> str:
    """Smallest representative of a pattern under the cyclic relabeling x->y->z->x."""
    variants = [axes]
    for _ in range(2):
        variants.append("".join(CYCLIC_RELABEL[a] for a in variants[-1]))
    return min(variants)


def solution_census(order_m: int = 2, n_starts: int = 40, seed: int = 7) -> list[DDSequence]:
    """Solve every interior pulse pattern of the right length, one per relabeling class.

    Patterns whose first pulse is not x are skipped since the cyclic
    relabeling maps them onto one that is. Returns every distinct solution.
    """
    n_int = {1: 3, 2: 6, 3: 12}[order_m]
    if order_m == 3:
        raise ValueError("a full census at order 3 (3**12 patterns) is out of reach; solve patterns directly")
    seen = set()
    out = []
    cfg = SolverConfig(n_starts=n_starts, seed=seed)
    for combo in itertools.product("xyz", repeat=n_int):
        pattern = "".join(combo)
        key = canonical_pattern(pattern)
        if key in seen:
            continue
        seen.add(key)
        out.extend(solve_intervals(order_m, key, cfg))
    return out


