"""
End-to-end tests of the nonloc command line, run in-process through main().
"""
import json

import numpy as np
import pytest

from nonloc import grid, io
from nonloc.main import main
from nonloc.models import GridFunction

SMALL = {"a": -1.0, "b": 1.0, "collar_width": 1.0, "node_count": 41}


def write_config(tmp_path, payload, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def summary(out):
    return json.loads((out / "summary.json").read_text(encoding="utf-8"))


# ==================== Presets ====================

def test_preset_list_prints_the_catalog(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["preset", "list", "--out", str(out)]) == 0
    names = [entry["name"] for entry in json.loads(capsys.readouterr().out)]
    assert "arctan_semilinear" in names
    assert names == sorted(names)
    result = summary(out)
    assert result["passed"]
    assert result["key_metrics"]["presets"] == names
    assert "presets.json" in result["artifacts"]


def test_preset_describe(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["preset", "describe", "illposed", "--out", str(out)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["solver"] == "illposed_demo"
    assert info["domain"]["collar_width"] == 3.5
    assert summary(out)["key_metrics"]["solver"] == "illposed_demo"
    assert json.loads((out / "preset.json").read_text(encoding="utf-8")) == info


def test_unknown_preset_is_a_usage_error(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["preset", "run", "nope", "--out", str(out)]) == 2
    assert "unknown preset" in capsys.readouterr().err
    assert not out.exists()


def test_preset_run_needs_a_name(capsys):
    assert main(["preset", "run"]) == 2
    assert "needs a preset name" in capsys.readouterr().err


def test_preset_run_quadratic_writes_all_artifacts(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {
        "domain": {**SMALL, "collar_width": 1.5},
        "solver": {"optimizer": {"grad_tol": 1e-11, "max_iters": 20000}},
    })
    assert main(["preset", "run", "quadratic", "--config", config, "--out", str(out)]) == 0
    result = summary(out)
    assert result["passed"]
    assert result["command"] == "preset"
    assert len(result["config_hash"]) == 64
    assert result["config"]["problem"]["preset"] == "quadratic"
    assert result["key_metrics"]["termination_reason"] == "gradient_tol"
    for name in ("solution.csv", "trace.json", "report.json", "residual.csv", "summary.json"):
        assert (out / name).exists()
        assert name in result["artifacts"]


def test_emit_list_limits_the_artifacts(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {
        "domain": {**SMALL, "collar_width": 1.5},
        "output": {"emit": ["solution_csv"]},
    })
    main(["minimize", "--preset", "quadratic", "--config", config, "--out", str(out)])
    assert sorted(p.name for p in out.iterdir()) == ["solution.csv", "summary.json"]


def test_same_config_gives_the_same_hash(tmp_path):
    config = write_config(tmp_path, {"domain": {**SMALL, "collar_width": 1.5}})
    out = tmp_path / "out"
    hashes = []
    for _ in range(2):
        main(["minimize", "--preset", "quadratic", "--config", config, "--out", str(out)])
        hashes.append(summary(out)["config_hash"])
    assert hashes[0] == hashes[1]


# ==================== Configuration errors ====================

def test_unknown_config_key_exits_2_without_output(tmp_path, capsys):
    out = tmp_path / "out"
    config = write_config(tmp_path, {"solver": {"optimizer": {"grad_toll": 1e-8}}})
    assert main(["minimize", "--preset", "quadratic", "--config", config, "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert "invalid config" in err
    assert "grad_toll" in err
    assert not out.exists()


def test_invalid_json_reports_the_line(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "solver": {,\n}', encoding="utf-8")
    out = tmp_path / "out"
    assert main(["minimize", "--preset", "quadratic", "--config", str(path), "--out", str(out)]) == 2
    assert f"{path}:2:" in capsys.readouterr().err
    assert not out.exists()


def test_config_that_is_not_utf8_exits_2(tmp_path, capsys):
    path = tmp_path / "config.json"
    path.write_bytes(b'{"solver":\n  "\xff"}\n')
    out = tmp_path / "out"
    assert main(["minimize", "--preset", "quadratic", "--config", str(path), "--out", str(out)]) == 2
    err = capsys.readouterr().err
    assert f"{path}:2:" in err
    assert "UTF-8" in err
    assert not out.exists()


def test_bad_flag_is_a_usage_error():
    assert main(["check", "flatness"]) == 2


def test_minimize_without_a_preset_is_a_usage_error(tmp_path, capsys):
    assert main(["minimize", "--out", str(tmp_path / "out")]) == 2
    assert "problem.preset" in capsys.readouterr().err


# ==================== apply ====================

def test_laplacian_of_a_constant_is_zero(tmp_path):
    d = grid.build_domain(-1.0, 1.0, 1.0, 41)
    io.write_grid_function(tmp_path / "u.csv", GridFunction(d, np.full(d.node_count, 3.0)))
    out = tmp_path / "out"
    code = main(["apply", "laplacian", "--u", str(tmp_path / "u.csv"), "--domain=-1,1,1,41",
                 "--kernel", "gaussian", "--sigma", "0.5", "--out", str(out)])
    assert code == 0
    result = io.read_grid_function(out / "laplacian.csv", d)
    assert np.all(result.scalar == 0.0)


def test_p_laplacian_rejects_p_one(tmp_path, capsys):
    d = grid.build_domain(-1.0, 1.0, 1.0, 41)
    io.write_grid_function(tmp_path / "u.csv", GridFunction.zeros(d))
    code = main(["apply", "p_laplacian", "--p", "1", "--u", str(tmp_path / "u.csv"),
                 "--domain=-1,1,1,41", "--out", str(tmp_path / "out")])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_apply_needs_an_input_function(tmp_path, capsys):
    assert main(["apply", "laplacian", "--domain=-1,1,1,41", "--out", str(tmp_path / "out")]) == 2
    assert "needs --u" in capsys.readouterr().err


def test_malformed_csv_names_file_and_line(tmp_path, capsys):
    path = tmp_path / "u.csv"
    path.write_text("x,u1\n-2.0,1.0\n-1.95,abc\n", encoding="utf-8")
    code = main(["apply", "laplacian", "--u", str(path), "--domain=-1,1,1,41",
                 "--out", str(tmp_path / "out")])
    assert code == 2
    assert f"{path}:3:" in capsys.readouterr().err


def test_csv_that_is_not_utf8_names_file_and_line(tmp_path, capsys):
    path = tmp_path / "u.csv"
    path.write_bytes(b"x,u1\n\xff\xfe,1\n")
    out = tmp_path / "out"
    code = main(["apply", "laplacian", "--u", str(path), "--domain=-1,1,1,41", "--out", str(out)])
    assert code == 2
    assert f"{path}:2: not valid UTF-8" in capsys.readouterr().err
    assert not out.exists()


def test_bad_domain_flag(tmp_path, capsys):
    code = main(["apply", "laplacian", "--u", "u.csv", "--domain=1,-1,1,41", "--out", str(tmp_path / "out")])
    assert code == 2
    assert "--domain" in capsys.readouterr().err


# ==================== Solvers ====================

def test_minimize_hitting_max_iters_exits_1(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {
        "domain": {**SMALL, "collar_width": 1.5},
        "solver": {"optimizer": {"max_iters": 1}},
    })
    assert main(["minimize", "--preset", "quadratic", "--config", config, "--out", str(out)]) == 1
    result = summary(out)
    assert not result["passed"]
    assert result["key_metrics"]["termination_reason"] == "max_iters"


def test_semilinear_command_solves_arctan(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {"domain": {"collar_width": 3.5, "node_count": 181}})
    assert main(["semilinear", "--preset", "arctan_semilinear", "--config", config, "--out", str(out)]) == 0
    metrics = summary(out)["key_metrics"]
    assert metrics["converged"]
    assert metrics["verified"]
    assert metrics["last_contraction"] < 1.0


def test_semilinear_that_stops_early_exits_1_with_a_summary(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {
        "domain": {"collar_width": 3.5, "node_count": 181},
        "solver": {"fixed_point": {"max_iters": 2}},
    })
    assert main(["semilinear", "--preset", "arctan_semilinear", "--config", config, "--out", str(out)]) == 1
    result = summary(out)
    assert not result["passed"]
    metrics = result["key_metrics"]
    assert not metrics["converged"]
    assert metrics["termination_reason"] == "max_iters"
    assert metrics["residual_tol"] == pytest.approx(1e-9)
    assert metrics["residual_inf"] > metrics["residual_tol"]


def test_check_convexity_of_arctan(tmp_path):
    out = tmp_path / "out"
    code = main(["check", "convexity", "--preset", "arctan_semilinear", "--trials", "2000",
                 "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text(encoding="utf-8"))
    assert report["check"] == "convexity"
    assert report["trials"] == 2000


def test_check_box_must_be_ordered(tmp_path):
    code = main(["check", "convexity", "--preset", "quadratic", "--box", "1", "-1",
                 "--out", str(tmp_path / "out")])
    assert code == 2


def test_check_needs_an_integrand(tmp_path, capsys):
    code = main(["check", "convexity", "--preset", "illposed", "--out", str(tmp_path / "out")])
    assert code == 2
    assert "no energy integrand" in capsys.readouterr().err


def test_residual_of_zero_for_double_power(tmp_path):
    d = grid.build_domain(-1.0, 1.0, 1.0, 41)
    io.write_grid_function(tmp_path / "zero.csv", GridFunction.zeros(d))
    config = write_config(tmp_path, {"domain": SMALL})
    out = tmp_path / "out"
    code = main(["residual", "--preset", "double_power", "--u", str(tmp_path / "zero.csv"),
                 "--config", config, "--out", str(out)])
    assert code == 0
    assert summary(out)["key_metrics"]["residual_inf"] == 0.0


def test_demo_illposed_shows_growing_norms(tmp_path):
    out = tmp_path / "out"
    config = write_config(tmp_path, {"domain": {"collar_width": 3.5, "node_count": 181}})
    assert main(["demo-illposed", "--levels", "3", "--config", config, "--out", str(out)]) == 0
    metrics = summary(out)["key_metrics"]
    assert metrics["preset"] == "illposed"
    assert metrics["levels"] == 3
    assert metrics["young_violations"] == 0
    assert all(g >= 1.3 for g in metrics["required_l1_growth"])


@pytest.mark.slow
def test_thread_count_does_not_change_the_solution(tmp_path):
    outputs = []
    for threads in ("1", "8"):
        out = tmp_path / f"threads{threads}"
        code = main(["preset", "run", "arctan_semilinear", "--threads", threads, "--out", str(out)])
        assert code == 0
        outputs.append((out / "solution.csv").read_bytes())
    assert outputs[0] == outputs[1]
