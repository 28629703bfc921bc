import json
import math

import pytest

from qtoroidal.cli import main, run_suite
from qtoroidal.config import ConfigError, SuiteConfig, from_mapping, load_config
from qtoroidal.report import CheckRecord, VerificationReport


def test_record_pass_rules():
    assert CheckRecord("x", {}, 1e-9, 1e-8).passed
    assert not CheckRecord("x", {}, 1e-7, 1e-8).passed
    assert not CheckRecord("x", {}, math.nan, 1e-8).passed
    assert CheckRecord("w", {}, 5.0, 1.0, "witness").passed
    assert not CheckRecord("w", {}, 0.5, 1.0, "witness").passed
    assert CheckRecord("x", {}, 0.0, 1e-8, exact_cols=0).vacuous


def test_report_summary_and_json():
    rep = VerificationReport()
    rep.add(CheckRecord("a", {"k": 1}, 1e-12, 1e-8, exact_cols=3))
    rep.add(CheckRecord("a", {"k": 2}, 1e-3, 1e-8, exact_cols=3))
    assert not rep.passed
    doc = json.loads(rep.to_json({"note": 1}))
    assert doc["summary"]["checks"]["a"]["failed"] == 1
    assert doc["note"] == 1 and len(doc["records"]) == 2


def test_config_validation_paths():
    with pytest.raises(ConfigError, match="^suites"):
        from_mapping({"suites": []})
    with pytest.raises(ConfigError, match=r"^suites\[1\]"):
        from_mapping({"suites": ["bosons", "nope"]})
    with pytest.raises(ConfigError, match=r"^ladder\[0\]"):
        from_mapping({"ladder": [-1]})
    with pytest.raises(ConfigError, match="^colour"):
        from_mapping({"colour": 1})
    with pytest.raises(ConfigError, match="^seed"):
        from_mapping({"seed": -3})


def test_config_hash_ignores_output_locations():
    a = SuiteConfig(report="x.json", cache="c")
    b = SuiteConfig()
    assert a.digest() == b.digest()
    assert SuiteConfig(seed=1).digest() != b.digest()


def test_yaml_and_json_loading(tmp_path):
    y = tmp_path / "c.yaml"
    y.write_text("m: 2\nn: 3\nseed: 4\nsuites: [contractions]\n")
    j = tmp_path / "c.json"
    j.write_text(json.dumps({"m": 2, "n": 3, "seed": 4, "suites": ["contractions"]}))
    assert load_config(y) == load_config(j)


def test_explicit_params(tmp_path):
    cfg = from_mapping({"params": {"q": [1.1, 0.2], "d": [0.3, 0.1], "dc": [0.2, 0.3],
                                   "u": [[1, 0], [0.9, 0.2]], "uc": [[1.1, 0], [0, 1]]}})
    assert cfg.resolve_params().q == 1.1 + 0.2j
    with pytest.raises(ConfigError, match="^params"):
        from_mapping({"params": {"q": [1, 0]}}).resolve_params()


def test_run_suite_deterministic():
    cfg = SuiteConfig(suites=["contractions", "highest-weight"])
    r1, h1 = run_suite(cfg)
    r2, h2 = run_suite(cfg)
    h1.pop("generated"), h2.pop("generated")
    assert r1.to_json(h1) == r2.to_json(h2)
    assert h1["passed"] and r1.passed


def test_skipped_suites_are_reported():
    rep, head = run_suite(SuiteConfig(m=2, n=3, suites=["coproduct", "iom-duality"]))
    assert head["skipped"] == ["coproduct", "iom-duality"] and not rep.records


def test_main_writes_report(tmp_path):
    out = tmp_path / "r.json"
    code = main(["--suite", "contractions", "--seed", "3", "--report", str(out)])
    doc = json.loads(out.read_text())
    assert code == 0 and doc["passed"] and doc["params"]["m"] == 2
    assert doc["summary"]["passed"]


def test_main_rejects_bad_input(tmp_path, capsys):
    assert main(["--suite", "bogus"]) == 2
    assert "suites[0]" in capsys.readouterr().err
    assert main(["--ladder", "1,x"]) == 2


def test_build_iom_command_uses_cache(tmp_path, capsys):
    args = ["build-iom", "--kind", "Gc", "--ladder", "1", "--cache", str(tmp_path)]
    cfg = tmp_path / "c.yaml"
    cfg.write_text("iom_D_max: 1\n")
    assert main(args + ["--config", str(cfg)]) == 0
    first = json.loads(capsys.readouterr().out)
    assert main(args + ["--config", str(cfg)]) == 0
    second = json.loads(capsys.readouterr().out)
    assert first["cache"]["misses"] == 1 and second["cache"]["hits"] == 1
    assert first["nnz"] == second["nnz"] > 0
