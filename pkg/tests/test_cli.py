"""
Command-line subcommands and their exit codes
"""

import contextlib
import io
import json
import os
import tempfile

import cli
from cycle_core import read_cycle
from cycle_fixtures import CYCLES_DIR, random_simple

ANTISYM = os.path.join(CYCLES_DIR, "antisymmetric_3x6.txt")
SIMPLE = os.path.join(CYCLES_DIR, "simple_5x6.txt")


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


def write(path, text):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def sim_config(tmp, **overrides):
    values = {
        "cycle_file": ANTISYM,
        "c0": 0.0,
        "beta": 3.0,
        "lambda": 20.0,
        "tau_ms": 2.0,
        "t_end_ms": 20.0,
        "dt_ms": 0.02,
        "seed": 4,
        "output_dir": os.path.join(tmp, "out"),
    }
    values.update(overrides)
    lines = [f"{k}: {v}" for k, v in values.items() if v is not None]
    return write(os.path.join(tmp, "run.yaml"), "\n".join(lines) + "\n")


def test_admissible_reports_class():
    code, out, _ = run("admissible", ANTISYM)
    assert code == 0
    assert "✓ Cycle is admissible" in out
    assert "simple" in out
    assert "{1, 3, 5}" in out


def test_not_admissible_exit_code():
    with tempfile.TemporaryDirectory() as tmp:
        path = write(os.path.join(tmp, "bad.txt"), "1 4\n+1 +1 +1 -1\n")
        code, out, _ = run("admissible", path)
    assert code == cli.NOT_ADMISSIBLE
    assert "not admissible" in out


def test_format_error_exit_code():
    code, _, err = run("admissible", "/nonexistent/cycle.txt")
    assert code == 2
    assert err.startswith("✗")


def test_normalized_output_reparses():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "norm.txt")
        code, _, _ = run("admissible", SIMPLE, "--normalized", path)
        assert code == 0
        assert read_cycle(path) == random_simple()
        with open(path) as fh:
            assert "+" in fh.read().splitlines()[1]


def test_graph_writes_json_and_dot():
    with tempfile.TemporaryDirectory() as tmp:
        prefix = os.path.join(tmp, "g")
        code, out, _ = run("graph", ANTISYM, "--out", prefix)
        assert code == 0
        with open(prefix + ".json") as fh:
            data = json.load(fh)
        assert os.path.exists(prefix + ".dot")
    assert sorted(len(loop) for loop in data["loops"]) == [2, 6]
    assert "2 loops" in out


def test_graph_enumeration_limit_exit_code():
    with tempfile.TemporaryDirectory() as tmp:
        path = write(os.path.join(tmp, "big.txt"), "25 2\n" + "+1 -1\n" * 25)
        code, _, err = run("graph", path, "--out", os.path.join(tmp, "g"))
    assert code == 3
    assert "N <= 24" in err


def test_simulate_outputs_are_deterministic():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = sim_config(tmp)
        outputs = []
        for _ in range(2):
            code, _, _ = run("simulate", cfg)
            assert code == 0
            files = {}
            for name in ("trajectory.csv", "raster.csv", "retrieval.json"):
                with open(os.path.join(tmp, "out", name), "rb") as fh:
                    files[name] = fh.read()
            outputs.append(files)
        with open(os.path.join(tmp, "out", "retrieval.json")) as fh:
            report = json.load(fh)
    assert outputs[0] == outputs[1]
    assert report["seed"] == 4
    assert report["aligned"] is True
    assert "order_full_traversals" in report


def test_simulate_flag_overrides():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = sim_config(tmp)
        out_dir = os.path.join(tmp, "other")
        code, _, _ = run("simulate", cfg, "--t-end", "4", "--out", out_dir)
        assert code == 0
        with open(os.path.join(out_dir, "trajectory.csv")) as fh:
            lines = fh.read().splitlines()
    assert len(lines) == 1 + 201


def test_simulate_batch_writes_sweep():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = sim_config(tmp, n_trajectories=3, initial_scale=0.01)
        code, _, _ = run("simulate", cfg)
        assert code == 0
        with open(os.path.join(tmp, "out", "sweep.csv")) as fh:
            lines = fh.read().splitlines()
    assert lines[0] == "trajectory,seed,final_code,last_sign_change_ms"
    assert len(lines) == 4


def test_simulate_config_errors():
    with tempfile.TemporaryDirectory() as tmp:
        assert run("simulate", sim_config(tmp, c0=2.0))[0] == 2
        assert run("simulate", sim_config(tmp, bogus_key=1))[0] == 2
        assert run("simulate", sim_config(tmp, beta=None))[0] == 2
        assert run("simulate", sim_config(tmp, dt_ms=0.3))[0] == 2
        assert run("simulate", os.path.join(tmp, "missing.yaml"))[0] == 2


def test_simulate_divergence_exit_code():
    with tempfile.TemporaryDirectory() as tmp:
        cfg = sim_config(tmp, tau_ms=0.0, dt_ms=100.0, t_end_ms=6000.0)
        code, _, err = run("simulate", cfg)
    assert code == 4
    assert "non-finite" in err


def test_curves_outputs():
    with tempfile.TemporaryDirectory() as tmp:
        out_dir = os.path.join(tmp, "curves")
        code, out, _ = run("curves", ANTISYM, "--tau", "2", "--beta-points", "20", "--out", out_dir)
        assert code == 0
        with open(os.path.join(out_dir, "scenario.json")) as fh:
            scen = json.load(fh)
        with open(os.path.join(out_dir, "curves.csv")) as fh:
            header = fh.readline().strip()
        assert os.path.exists(os.path.join(out_dir, "saddle_node.csv"))
    assert header == "beta,c0,n_index,branch_id,kind"
    assert scen["indices"] == [1, 3, 5]
    assert scen["pitchfork"] is True
    assert len(scen["bt_points"]) == 1


def test_bad_beta_range():
    with tempfile.TemporaryDirectory() as tmp:
        code, _, _ = run("sn-curve", "--beta-min", "0.5", "--out", os.path.join(tmp, "sn.csv"))
    assert code == 2


def test_sn_curve():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "sn.csv")
        code, _, _ = run("sn-curve", "--beta-min", "1.5", "--beta-max", "4", "--beta-points", "5", "--out", path)
        assert code == 0
        with open(path) as fh:
            lines = fh.read().splitlines()
    assert lines[0] == "beta,c0_star"
    assert len(lines) == 6


def test_ring():
    code, out, _ = run("ring", "--beta", "2", "--lambda", "10")
    assert code == 0
    assert "stable" in out
    assert run("ring", "--lambda", "10")[0] == 2


def test_equilibria_report():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "eq", "report.json")
        code, out, _ = run("equilibria", ANTISYM, "--c0", "0.9", "--beta", "3", "--lambda", "10",
                           "--pattern", "1", "--out", path)
        assert code == 0
        with open(path) as fh:
            report = json.load(fh)
    assert report["count_class"] == "three_to_the_n"
    assert report["stable_two_to_the_n"] is True
    assert len(report["equilibria"]) == 27
    assert sum(e["stable"] for e in report["equilibria"]) == 8
    assert "27 equilibria, 8 stable" in out


def test_equilibria_skips_enumeration_for_large_networks():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "report.json")
        code, out, _ = run("equilibria", SIMPLE, "--c0", "0.3", "--beta", "3", "--lambda", "10", "--out", path)
        assert code == 0
        with open(path) as fh:
            report = json.load(fh)
        missing_beta = run("equilibria", ANTISYM, "--c0", "0.9", "--lambda", "10", "--out", path)
    assert report["count_class"] == "one"
    assert "equilibria" not in report
    assert "enumeration skipped" in out
    assert missing_beta[0] == 2


def test_verbose_flag_before_subcommand():
    code, out, _ = run("-v", "ring", "--beta", "2", "--lambda", "10")
    assert code == 0
    assert "u*" in out
    assert cli.build_parser().parse_args(["-v", "ring", "--lambda", "1"]).verbose
