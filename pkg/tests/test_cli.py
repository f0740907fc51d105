import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinbath_dd.cli_experiments import (ExperimentSpec, Kind, ScheduleSpec, SpecError, compare_sequences,
                                         crossover_fields, initial_state_check, leader_changes, rank_scores,
                                         resolve_sequence, run)
from spinbath_dd.cli_experiments import cli
from spinbath_dd.dynamics import NumericalError
from spinbath_dd.sequence_design import exact_sequence, verify_order
from spinbath_dd.spin_model import ModelConfig


def write_spec(tmp_path, data, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


SMALL_ECHO = {"kind": "echo_curve", "model": {"L": 4, "epsilon": -0.3},
              "schedule": {"sequence": "m1_xz", "period_T": 1.0},
              "options": {"n_samples": 5, "method": "exact"}}


# -- specs ------------------------------------------------------------------------


@given(st.sampled_from(list(Kind)), st.integers(2, 6).map(lambda n: 2 * n), st.floats(-1, 1),
       st.sampled_from(["heisenberg", "ising"]), st.floats(0.1, 5), st.sampled_from(["ideal", "finite"]),
       st.lists(st.floats(5, 50), min_size=1, max_size=4))
@settings(max_examples=40, deadline=None)
def test_spec_roundtrip(kind, L, eps, coupling, T, mode, Bs):
    spec = ExperimentSpec(kind, ModelConfig(L=L, epsilon=eps, coupling=coupling),
                          ScheduleSpec("m2_xzxzxz", T, mode), {"B": Bs}, {"dt": 0.01})
    back = ExperimentSpec.from_json(spec.to_json())
    assert back == spec and back.digest == spec.digest


@pytest.mark.parametrize("data, field", [
    ({"model": {}}, "kind"),
    ({"kind": "bogus"}, "kind"),
    ({"kind": "echo_curve", "extra": 1}, "extra"),
    ({"kind": "echo_curve", "model": {"L": 1}}, "model.L"),
    ({"kind": "echo_curve", "schedule": {"mode": "wide"}}, "schedule.mode"),
    ({"kind": "echo_curve", "schedule": {"insertion": "before"}}, "schedule.insertion"),
    ({"kind": "echo_curve", "schedule": {"B": -1}}, "schedule.B"),
    ({"kind": "echo_curve", "schedule": {"period_T": 0}}, "schedule.period_T"),
    ({"kind": "nop_sweep", "sweep": {"Q": [1]}}, "sweep.Q"),
    ({"kind": "nop_sweep", "sweep": {"B": []}}, "sweep.B"),
])
def test_spec_errors_name_the_field(data, field):
    with pytest.raises(SpecError) as info:
        ExperimentSpec.from_dict(data)
    assert info.value.field == field


def test_resolve_sequence_forms():
    assert verify_order(resolve_sequence("m2_xzxzxz", 2.0)) == 2
    assert resolve_sequence("udd3_z").axes_string == "zzz"
    assert resolve_sequence("qdd1").axes_string == "xzx"
    assert resolve_sequence("free", 3.0).n_pulses == 0
    custom = resolve_sequence({"axes": "xzx", "alphas": [1, 1, 1, 1]})
    assert np.allclose(custom.alphas, 0.25)
    with pytest.raises(KeyError):
        resolve_sequence("m9")


def test_critical_period_from_field():
    cfg = ModelConfig(L=4, J_meV=0.1)
    sched = ScheduleSpec("m2_xzxzxz", None, "finite", B=20.0).build(cfg)
    assert math.isclose(sched.seq.period_T, sched.tau_p / min(sched.seq.intervals))
    with pytest.raises(SpecError):
        ScheduleSpec("m2_xzxzxz", None, "ideal").build(cfg)


# -- command line -------------------------------------------------------------------


def test_simulate_writes_outputs(tmp_path, capsys):
    cfg = write_spec(tmp_path, SMALL_ECHO)
    out = tmp_path / "out"
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert "m1_xz" in report
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["kind"] == "echo_curve"
    assert manifest["spec_hash"] == ExperimentSpec.load(cfg).digest
    assert {o["path"] for o in manifest["outputs"]} == {"spec.json", "echo_curve_m1_xz.csv"}
    lines = (out / "echo_curve_m1_xz.csv").read_text().splitlines()
    assert lines[0].startswith("t,L,") and len(lines) == 6


def test_rerun_is_byte_identical(tmp_path):
    cfg = write_spec(tmp_path, SMALL_ECHO)
    for d in ("a", "b"):
        assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / d)]) == 0
    assert (tmp_path / "a/echo_curve_m1_xz.csv").read_bytes() == (tmp_path / "b/echo_curve_m1_xz.csv").read_bytes()


def test_validation_errors_exit_2(tmp_path, capsys):
    bad = write_spec(tmp_path, {"kind": "echo_curve", "model": {"L": 1}})
    assert cli.main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert "model.L" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text("{")
    assert cli.main(["simulate", "--config", str(broken), "--out", str(tmp_path / "o")]) == 2
    assert cli.main(["simulate", "--config", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o")]) == 2


def test_kind_mismatch_exit_2(tmp_path, capsys):
    cfg = write_spec(tmp_path, SMALL_ECHO)
    assert cli.main(["slope", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "kind" in capsys.readouterr().err


def test_numerical_errors_exit_3(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalError("norm drift 1e-3 exceeds tolerance")

    monkeypatch.setattr(cli, "run", boom)
    cfg = write_spec(tmp_path, SMALL_ECHO)
    assert cli.main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3


def test_derive_verb(tmp_path, capsys):
    cfg = write_spec(tmp_path, {"kind": "derive_sequences", "options": {"order": 1, "n_starts": 20}})
    assert cli.main(["derive", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["n_solutions"] >= 1 and report["max_residual"] < 1e-10


def test_slope_verb(tmp_path, capsys):
    cfg = write_spec(tmp_path, {"kind": "slope_check", "model": {"L": 4, "epsilon": -0.3},
                                "sweep": {"T": [0.003, 0.01, 0.03, 0.1]},
                                "options": {"sequences": ["m1_xz", "m2_xzxzxz"]}})
    assert cli.main(["slope", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    slopes = json.loads(capsys.readouterr().out)["slopes"]
    assert abs(slopes["m1_xz"] - 2) < 0.2 and abs(slopes["m2_xzxzxz"] - 3) < 0.2


def test_crosscheck_oracle_verb(tmp_path, capsys):
    cfg = write_spec(tmp_path, {"kind": "oracle_crosscheck", "model": {"epsilon": -0.3}, "sweep": {"L": [6]},
                                "options": {"t_max": 1.0, "n_samples": 5, "dt": 0.005}})
    assert cli.main(["crosscheck", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
    assert json.loads(capsys.readouterr().out)["L=6"]["max_abs_diff"] < 1e-5


def test_crosscheck_bath_state_verb(tmp_path, capsys):
    cfg = write_spec(tmp_path, {**SMALL_ECHO, "model": {"L": 6, "epsilon": -0.3}})
    out = tmp_path / "o"
    assert cli.main(["crosscheck", "--config", str(cfg), "--out", str(out)]) == 0
    summary = json.loads((out / "initial_state_check.json").read_text())
    assert 0 <= summary["ratio"] and len(summary["csv"]) == 2


# -- ranking and bath-state robustness ----------------------------------------------------


def test_rank_helpers():
    assert rank_scores({"a": 1.0, "b": 3.0, "c": 3.0}) == ["b", "c", "a"]
    ranks = {10.0: ["m1", "m2"], 20.0: ["m1", "m2"], 30.0: ["m2", "m1"]}
    assert leader_changes(ranks) == [{"between": [20.0, 30.0], "from": "m1", "to": "m2"}]
    assert crossover_fields([10, 20, 30], [1, 2, 5], [2, 3, 4]) == [pytest.approx(25.0)]
    assert crossover_fields([10, 20], [1, 2], [0, 1]) == []


def test_compare_sequences_deterministic():
    model = ModelConfig(L=6, epsilon=-0.3)
    specs = [ExperimentSpec(Kind.EFFECTIVE_DYNAMICS, model, ScheduleSpec(name, 0.5, n_cycles=12))
             for name in ("m1_xz", "m2_xzxzxz", "free")]
    a = compare_sequences(specs)
    b = compare_sequences(specs)
    assert a == b
    assert [r.rank for r in a] == [1, 2, 3]
    assert a[-1].label == "free"
    with pytest.raises(SpecError):
        compare_sequences(specs + [ExperimentSpec(Kind.EFFECTIVE_DYNAMICS, model.with_(L=8))])


def test_initial_state_check_decoupled_is_zero():
    rep = initial_state_check(ModelConfig(L=6, epsilon=0.0), exact_sequence("m1_xz", 1.0), n_samples=5)
    assert rep.max_abs_diff < 1e-12 and rep.ratio == 0.0


def test_run_returns_manifest(tmp_path):
    spec = ExperimentSpec.from_dict({"kind": "insertion_comparison", "model": {"L": 4, "epsilon": -0.3},
                                     "schedule": {"sequence": "m1_xz", "period_T": 1.0, "mode": "finite",
                                                  "tau_p": 0.05, "n_cycles": 2},
                                     "sweep": {"theta": [0.1, 0.3]}})
    man = run(spec, tmp_path)
    assert set(man.tolerance_report["best_scheme"]) == {"0.100000", "0.300000"}
    assert (tmp_path / "insertion.csv").read_text().count("\n") == 7
    assert not list(tmp_path.glob(".manifest-*"))
