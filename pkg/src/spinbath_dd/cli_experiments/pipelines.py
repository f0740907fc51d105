"""Experiment pipelines, the run manifest and sequence ranking."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from .. import dynamics as dyn
from .. import free_fermion as ff
from ..sequence_design import SolverConfig, free_sequence, solve_intervals, verify_order
from ..sequence_design.moments import ConstraintSystem
from ..spin_model import Model, ModelConfig, bell_state, qubit_basis_state
from .spec import ExperimentSpec, Kind, SpecError, sequence_label

log = logging.getLogger(__name__)

DEFAULT_THETAS = (math.pi / 4, math.pi / 2, 3 * math.pi / 4)
SCHEMES = ("after_cycle", "mid_cycle", "constant_field")


@dataclass
class RunManifest:
    spec_hash: str
    version: str
    kind: str
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tolerance_report: dict = field(default_factory=dict)

    def write(self, out_dir) -> Path:
        """Write ``manifest.json`` atomically (temporary file, then rename)."""
        path = Path(out_dir) / "manifest.json"
        fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=".manifest-", suffix=".json")
        with os.fdopen(fd, "w") as fh:
            json.dump(clean_json(asdict(self)), fh, indent=2, sort_keys=True, default=_jsonable)
            fh.write("\n")
        os.replace(tmp, path)
        return path


def clean_json(x):
    """Replace NaN and infinities by None so the output is strict JSON."""
    if isinstance(x, dict):
        return {k: clean_json(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [clean_json(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(x) if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    return x


def _jsonable(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return dyn.format_float(float(v))
    return "" if v is None else str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])
    return path


def _file_record(path: Path, out_dir: Path) -> dict:
    data = path.read_bytes()
    return {"path": str(path.relative_to(out_dir)), "sha256": hashlib.sha256(data).hexdigest(),
            "bytes": len(data)}


def _pmap(fn, items, workers: int):
    """Ordered map over independent sweep points, optionally in worker processes."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# -- individual pipelines -------------------------------------------------------


def _derive(spec: ExperimentSpec, out: Path):
    order = int(spec.option("order", 2))
    pattern = spec.option("pattern", {1: "xzx", 2: "xzxzxz", 3: "xz" * 6}.get(order))
    if pattern is None:
        raise SpecError("options.pattern", f"no default pattern for order {order}")
    cfg = SolverConfig(n_starts=int(spec.option("n_starts", 200)), seed=int(spec.option("seed", 20100101)))
    sols = solve_intervals(order, pattern, cfg)
    system = ConstraintSystem(order, pattern)
    rows = []
    for k, s in enumerate(sols):
        res = float(np.max(np.abs(system.residuals(s.alphas))))
        rows.append([k, order, s.axes_string, s.parity_axis.value, res, verify_order(s), *s.intervals])
    n = len(pattern) + 1
    header = ["solution", "order", "axes", "parity", "max_residual", "verified_order"] + [f"alpha_{i}" for i in range(1, n + 1)]
    path = write_csv(out / "sequences.csv", header, rows)
    return [path], {"n_solutions": len(sols), "max_residual": max((r[4] for r in rows), default=None)}


def _curve_initial(kind: Kind, model: Model):
    if kind is Kind.CONCURRENCE_CURVE:
        if model.n_qubits != 2:
            raise SpecError("model.qubit_sites", "a concurrence curve needs two qubits")
        return dyn.QuantumState(model.product_state(bell_state("phi+")), 0.0, 2)
    label = "up" if kind is Kind.RELAXATION_CURVE else "+x"
    return dyn.initial_state(model, label)


def _sequences(spec: ExperimentSpec) -> list:
    return list(spec.option("sequences", [spec.schedule.sequence]))


def _curves(spec: ExperimentSpec, out: Path):
    model = Model(spec.model)
    bath = int(spec.option("bath_state", 0))
    if bath:
        if spec.kind is not Kind.ECHO_CURVE:
            raise SpecError("options.bath_state", "excited bath states are only offered for echo curves")
        state = dyn.initial_state(model, "+x", model.bath_states(bath + 1)[bath].state)
    else:
        state = _curve_initial(spec.kind, model)
    paths, report = [], {}
    method, dt = spec.option("method", "trotter"), float(spec.option("dt", 0.005))
    n_samples = int(spec.option("n_samples", 101))
    rho0 = dyn.reduced_density(state)
    for name in _sequences(spec):
        sched = spec.schedule.build(spec.model, name)
        times = np.linspace(0.0, sched.total_duration, n_samples)
        states = dyn.evolve_sequence(state, sched, model, times, method, dt)
        rows = [dyn.trajectory_row(s, rho0) for s in states]
        label = sequence_label(name)
        path = out / f"{spec.kind.value}_{label}.csv"
        dyn.write_trajectory(path, rows)
        paths.append(path)
        report[label] = {"final": dict(zip(dyn.TRAJECTORY_HEADER[1:], rows[-1][1:]))}
    return paths, report


def insertion_distances(spec: ExperimentSpec, thetas) -> list[tuple[float, str, float]]:
    """Trace distance to R_x(theta)|up> after the schedule, for each insertion scheme."""
    model = Model(spec.model)
    state = dyn.initial_state(model, "up")
    method, dt = spec.option("method", "exact"), float(spec.option("dt", 0.005))
    rows = []
    for th in thetas:
        target = dyn.ReducedDensity.pure(dyn.rotation("x", th) @ qubit_basis_state("up"))
        for scheme in SCHEMES:
            sched = spec.schedule.build(spec.model, theta=th, insertion=scheme)
            res = dyn.run_periodic(sched, model, sched.n_cycles, state, method, dt)
            rows.append((float(th), scheme, dyn.trace_distance(res.rhos[-1], target)))
    return rows


def _insertion(spec: ExperimentSpec, out: Path):
    thetas = spec.sweep.get("theta", list(DEFAULT_THETAS))
    rows = insertion_distances(spec, thetas)
    path = write_csv(out / "insertion.csv", ["theta", "scheme", "D"], rows)
    best = {}
    for th in thetas:
        sub = {s: d for t, s, d in rows if t == th}
        best[f"{th:.6f}"] = min(sub, key=sub.get)
    return [path], {"best_scheme": best}


def _observable_setup(spec: ExperimentSpec, model: Model):
    obs = spec.option("observable", "echo")
    if obs == "echo":
        return obs, dyn.initial_state(model, "+x"), (0,)
    if obs == "sigma_z":
        return obs, dyn.initial_state(model, "up"), (0,)
    if obs == "concurrence":
        if model.n_qubits != 2:
            raise SpecError("model.qubit_sites", "concurrence needs two qubits")
        return obs, dyn.QuantumState(model.product_state(bell_state("phi+")), 0.0, 2), None
    raise SpecError("options.observable", f"unknown observable {obs!r}")


def _effective(spec: ExperimentSpec, out: Path):
    model = Model(spec.model)
    obs, state, qubits = _observable_setup(spec, model)
    method, dt = spec.option("method", "trotter"), float(spec.option("dt", 0.01))
    rows, report = [], {}
    for name in _sequences(spec):
        sched = spec.schedule.build(spec.model, name)
        res = dyn.run_periodic(sched, model, sched.n_cycles, state, method, dt, qubits)
        series = res.series(obs)
        label = sequence_label(name)
        rows += [(label, n, t, v) for n, (t, v) in enumerate(zip(res.times, series))]
        nop = dyn.half_crossing(series)
        report[label] = {"period_T": sched.seq.period_T, "n_op": nop.n, "n_op_real": nop.n_real}
    path = write_csv(out / "effective_dynamics.csv", ["sequence", "n", "t", obs], rows)
    return [path], report


def _nop_point(args):
    model_cfg, sched_spec, name, B, n_cycles, obs, method, dt = args
    spec = ExperimentSpec(Kind.NOP_SWEEP, model_cfg, sched_spec)
    sched = spec.schedule.build(model_cfg, name, B=B, period_T=None if sched_spec.mode == "finite" else sched_spec.period_T)
    res = dyn.n_op(sched, Model(model_cfg), obs, n_cycles, method, dt)
    return (float(B), sched.seq.pulse_width_tau_p, sequence_label(name), sched.seq.period_T, res.n, res.n_real)


def _nop_sweep(spec: ExperimentSpec, out: Path):
    if "B" not in spec.sweep:
        raise SpecError("sweep.B", "a field sweep needs a list of B values")
    if spec.schedule.mode != "finite":
        raise SpecError("schedule.mode", "N_op sweeps use finite-width pulses")
    n_cycles = int(spec.option("n_cycles", 200))
    obs = spec.option("observable", "echo")
    method, dt = spec.option("method", "exact"), float(spec.option("dt", 0.01))
    sched_spec = spec.schedule.__class__(**{**asdict(spec.schedule), "period_T": None})
    items = [(spec.model, sched_spec, name, B, n_cycles, obs, method, dt)
             for B in spec.sweep["B"] for name in _sequences(spec)]
    rows = _pmap(_nop_point, items, int(spec.option("workers", 1)))
    path = write_csv(out / "nop_sweep.csv", ["B", "tau_p", "sequence", "T_c", "n_op", "n_op_real"], rows)
    table = {}
    for B, _, label, _, n, nr in rows:
        table.setdefault(B, {})[label] = nr if nr is not None else math.inf
    ranks = {B: rank_scores(scores) for B, scores in table.items()}
    return [path], {"best_by_B": {str(B): r[0] for B, r in ranks.items()},
                    "leader_changes": leader_changes(ranks)}


def _oracle(spec: ExperimentSpec, out: Path):
    Ls = spec.sweep.get("L", [8, 10, 12])
    t_max = float(spec.option("t_max", 2.0))
    times = np.linspace(0.0, t_max, int(spec.option("n_samples", 41)))
    dt = float(spec.option("dt", 0.005))
    rows, report = [], {}
    for L in Ls:
        cfg = spec.model.with_(L=int(L), coupling="ising", delta=0.0, qubit_sites=(int(L) // 2,))
        mb = manybody_free_echo(cfg, times, dt)
        oracle = ff.echo_curve(cfg.L, cfg.epsilon, times, cfg.qubit_sites[0], cfg.J, cfg.spin_factor)
        diff = np.abs(mb - oracle)
        rows += [(cfg.L, t, a, b, d) for t, a, b, d in zip(times, oracle, mb, diff)]
        report[f"L={cfg.L}"] = {"max_abs_diff": float(diff.max())}
    path = write_csv(out / "oracle_crosscheck.csv", ["L", "t", "L_oracle", "L_manybody", "abs_diff"], rows)
    return [path], report


def manybody_free_echo(cfg: ModelConfig, times, dt: float = 0.005, method: str = "trotter") -> np.ndarray:
    """Free-decay echo of a |+x> qubit from the many-body engine."""
    model = Model(cfg)
    sched = dyn.Schedule(free_sequence(max(float(np.max(times)), 1e-12)))
    states = dyn.evolve_sequence(dyn.initial_state(model, "+x"), sched, model, times, method, dt)
    return np.array([dyn.loschmidt_echo(dyn.reduced_density(s)) for s in states])


def _slope(spec: ExperimentSpec, out: Path):
    model = Model(spec.model)
    grid = spec.sweep.get("T", list(np.logspace(-3, -1, 7)))
    names = spec.option("sequences", ["m1_xz", "m2_xzxzxz", "m3_xz"])
    component = spec.option("component", "full")
    norm = spec.option("norm", "spectral")
    d_rows, s_rows, report = [], [], {}
    for name in names:
        seq = spec.schedule.__class__(sequence=name).build(spec.model).seq
        r = dyn.suppression_slope(seq, model, grid, norm, component)
        label = sequence_label(name)
        d_rows += [(label, t, d) for t, d in zip(r.T_grid, r.deltas)]
        s_rows.append((label, r.slope))
        report[label] = r.slope
    p1 = write_csv(out / "slope_deltas.csv", ["sequence", "T", "delta"], d_rows)
    p2 = write_csv(out / "slopes.csv", ["sequence", "slope"], s_rows)
    return [p1, p2], {"slopes": report, "component": component, "norm": norm}


_PIPELINES = {
    Kind.DERIVE_SEQUENCES: _derive,
    Kind.ECHO_CURVE: _curves,
    Kind.CONCURRENCE_CURVE: _curves,
    Kind.RELAXATION_CURVE: _curves,
    Kind.INSERTION_COMPARISON: _insertion,
    Kind.EFFECTIVE_DYNAMICS: _effective,
    Kind.NOP_SWEEP: _nop_sweep,
    Kind.ORACLE_CROSSCHECK: _oracle,
    Kind.SLOPE_CHECK: _slope,
}


def run(spec: ExperimentSpec, out_dir) -> RunManifest:
    """Run one experiment, writing its CSV files and ``manifest.json`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "spec.json").write_text(spec.to_json())
    t0 = time.perf_counter()
    paths, report = _PIPELINES[spec.kind](spec, out)
    elapsed = time.perf_counter() - t0
    manifest = RunManifest(spec.digest, __version__, spec.kind.value, {"total_s": round(elapsed, 3)},
                           [_file_record(Path(p), out) for p in [out / "spec.json", *paths]], report)
    manifest.write(out)
    log.info("%s finished in %.1f s", spec.kind.value, elapsed)
    return manifest


# -- ranking ------------------------------------------------------------------------


def rank_scores(scores: dict) -> list[str]:
    """Labels sorted best first (higher score wins, ties broken by label)."""
    return sorted(scores, key=lambda k: (-scores[k], k))


def leader_changes(ranks: dict) -> list[dict]:
    """Fields between which the best sequence changes, in increasing B."""
    Bs = sorted(ranks)
    return [{"between": [a, b], "from": ranks[a][0], "to": ranks[b][0]}
            for a, b in zip(Bs[:-1], Bs[1:]) if ranks[a][0] != ranks[b][0]]


@dataclass(frozen=True)
class RankEntry:
    label: str
    n_op: int | None
    n_op_real: float | None
    area: float
    final: float
    rank: int


def compare_sequences(specs: list[ExperimentSpec], metric: str = "n_op") -> list[RankEntry]:
    """Rank sequences on a shared model and observable.

    ``metric="n_op"`` ranks by the number of operations before the
    observable halves (not reached counts as best), with ties broken by the
    area under the stroboscopic curve; ``metric="final"`` ranks by the
    observable after one cycle.
    """
    if not specs:
        return []
    model, obs = specs[0].model, specs[0].option("observable", "echo")
    for s in specs[1:]:
        if s.model != model or s.option("observable", "echo") != obs:
            raise SpecError("model", "all compared specs must share model and observable")
    if metric not in ("n_op", "final"):
        raise ValueError("metric must be 'n_op' or 'final'")
    m = Model(model)
    _, state, qubits = _observable_setup(specs[0], m)
    rows = []
    for s in specs:
        sched = s.schedule.build(model)
        n = sched.n_cycles if metric == "n_op" else 1
        res = dyn.run_periodic(sched, m, n, state, s.option("method", "exact"), float(s.option("dt", 0.01)), qubits)
        series = res.series(obs)
        nop = dyn.half_crossing(series)
        area = float(np.sum((series[1:] + series[:-1]) / 2))
        rows.append((sequence_label(s.schedule.sequence), nop, area, float(series[1])))

    def key(r):
        label, nop, area, final = r
        if metric == "final":
            return (-final, label)
        reached = nop.n_real if nop.reached else math.inf
        return (-reached, -area, label)

    rows.sort(key=key)
    return [RankEntry(lab, nop.n, nop.n_real, area, final, k + 1) for k, (lab, nop, area, final) in enumerate(rows)]


def crossover_fields(B_values, score_a, score_b) -> list[float]:
    """Fields where ``score_a - score_b`` changes sign (linear interpolation)."""
    B = np.asarray(B_values, dtype=float)
    d = np.asarray(score_a, dtype=float) - np.asarray(score_b, dtype=float)
    out = []
    for i in range(len(B) - 1):
        if d[i] == 0:
            out.append(float(B[i]))
        elif d[i] * d[i + 1] < 0:
            out.append(float(B[i] + (B[i + 1] - B[i]) * d[i] / (d[i] - d[i + 1])))
    return out


# -- bath-state robustness --------------------------------------------------------------


@dataclass
class InitialStateReport:
    max_abs_diff: float
    max_decay: float
    ratio: float
    csv_paths: list = field(default_factory=list)


def initial_state_check(model_cfg: ModelConfig, seq, n_samples: int = 51, method: str = "exact",
                        dt: float = 0.005, out_dir=None) -> InitialStateReport:
    """Echo over one cycle for the bath ground state versus the first excited state."""
    model = Model(model_cfg)
    pairs = model.bath_states(2)
    sched = dyn.Schedule(seq)
    times = np.linspace(0.0, seq.period_T, n_samples)
    curves, paths = [], []
    for k, pair in enumerate(pairs):
        st = dyn.initial_state(model, "+x", pair.state)
        states = dyn.evolve_sequence(st, sched, model, times, method, dt)
        rows = [dyn.trajectory_row(s) for s in states]
        curves.append(np.array([r[1] for r in rows]))
        if out_dir is not None:
            p = Path(out_dir) / f"echo_bath{k}.csv"
            dyn.write_trajectory(p, rows)
            paths.append(str(p))
    diff = float(np.max(np.abs(curves[0] - curves[1])))
    decay = float(max(np.max(1 - curves[0]), np.max(1 - curves[1])))
    # below rounding level there is no decay to compare against
    ratio = diff / decay if decay > 1e-12 else 0.0
    return InitialStateReport(diff, decay, ratio, paths)
