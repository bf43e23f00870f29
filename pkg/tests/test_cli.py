import json

import pytest
import scipy.io

from wgquad.cli import EXIT_CONFIG, EXIT_OK, EXIT_TOL, main


def test_derive_rules_quadratic(tmp_path, capsys):
    assert main(["derive-rules", "--degree", "2", "--out", str(tmp_path)]) == EXIT_OK
    text = (tmp_path / "rules_p2.json").read_text()
    data = json.loads(text)
    assert abs(data["rules"][0]["nodes"][0] - 0.71241440095955149482) < 1e-15
    assert "0.71241440095955144" in text  # 17 significant digits
    assert "residual_max" in capsys.readouterr().out


def test_derive_rules_cubic_stiffness(tmp_path):
    code = main(["derive-rules", "--degree", "3", "--kind", "stiffness", "--omega1", "1.0", "--out", str(tmp_path)])
    assert code == EXIT_OK
    rule = json.loads((tmp_path / "rules_p3_stiffness.json").read_text())["rules"][0]
    assert abs(rule["nodes"][0] - 0.24033518882038592858) < 1e-15


def test_derive_rules_tolerance_failure(tmp_path):
    assert main(["derive-rules", "--degree", "2", "--tolerance", "0", "--out", str(tmp_path)]) == EXIT_TOL


def test_unsafe_newton_report(tmp_path, capsys):
    main(["derive-rules", "--degree", "3", "--unsafe-newton", "--start", "reference", "--out", str(tmp_path)])
    report = json.loads((tmp_path / "rules_p3.json").read_text())["unconstrained_newton"]
    assert "converged" in report
    # from a start next to the out-of-bracket root, the root is found and rejected
    main(["derive-rules", "--degree", "3", "--unsafe-newton", "--start", "0.76,2.3,1.15,0.74",
          "--out", str(tmp_path)])
    report = json.loads((tmp_path / "rules_p3.json").read_text())["unconstrained_newton"]
    assert report["converged"] and not report["accepted_by_brackets"]
    assert abs(report["final_iterate"]["tau2"] - 2.30382606794266282352) < 1e-9


def test_assemble_writes_outputs(tmp_path, capsys):
    code = main(["assemble", "--d", "1", "--p", "3", "--mesh", "4", "--kind", "mass", "--check-oracle",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    M = scipy.io.mmread(str(tmp_path / "mass_gauss-weighted_d1_p3.mtx"))
    assert M.shape == (7, 7)
    counters = json.loads((tmp_path / "counters.json").read_text())
    assert counters[0]["strategy"] == "gauss-weighted"
    assert "max |A - oracle|" in capsys.readouterr().out


def test_assemble_is_deterministic(tmp_path):
    for k in (1, 2):
        main(["assemble", "--d", "2", "--p", "2", "--mesh", "6", "--out", str(tmp_path / str(k))])
    for name in ("mass_gauss-weighted_d2_p2.mtx", "counters.json", "assemble_summary.json"):
        assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes()


def test_oracle_failure_exit(tmp_path):
    code = main(["assemble", "--d", "1", "--p", "2", "--mesh", "8", "--check-oracle", "--oracle-tol", "-1",
                 "--no-export", "--out", str(tmp_path)])
    assert code == EXIT_TOL


def test_config_file(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"command": "study", "study": "poisson", "d": 1, "p": 2,
                               "meshes": [4, 8, 16], "out": str(tmp_path / "o")}))
    assert main(["--config", str(cfg)]) == EXIT_OK
    assert (tmp_path / "o" / "poisson_d1_p2.json").exists()


@pytest.mark.parametrize("cfg", [
    {"command": "assemble", "bogus": 1},
    {"command": "assemble", "p": "x"},
    {"command": "assemble", "strategy": "simpson"},
    {"command": "nothing"},
    [1, 2],
])
def test_config_errors(tmp_path, cfg):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["--config", str(path)]) == EXIT_CONFIG


def test_flag_errors():
    assert main(["assemble", "--d", "5"]) == EXIT_CONFIG
    assert main(["assemble", "--p", "5", "--strategy", "gauss-weighted"]) == EXIT_CONFIG
    assert main(["assemble", "--d", "2", "--mesh", "3,4,5"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG


def test_help_lists_tolerances(capsys):
    with pytest.raises(SystemExit):
        main(["assemble", "--help"])
    out = capsys.readouterr().out
    assert "1e-12" in out
    with pytest.raises(SystemExit):
        main(["study", "--help"])
    assert "1e-09" in capsys.readouterr().out


def test_study_eig(tmp_path):
    code = main(["study", "eig-convergence", "--d", "1", "--p", "2", "--meshes", "8,16,32,64",
                 "--out", str(tmp_path)])
    assert code == EXIT_OK
    rep = json.loads((tmp_path / "eig_convergence_d1_p2.json").read_text())
    assert abs(rep["rate"] - 4) <= 0.3
