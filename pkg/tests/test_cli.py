"""Harness behavior: exit codes, determinism, isolation, artifacts."""

import json
import os

from orliczkit import cli


CONFIG_YOUNG = """
id = "t-young"
task = "certify-young"
seed = 1

[[young]]
label = "power2"
kind = "power"
p = 2.0
expect_delta2 = true
expect_nabla2 = true
"""

CONFIG_BAD_KEY = """
id = "t-bad"
task = "certify-young"
seed = 1

[[young]]
kind = "warp-drive"
"""

CONFIG_FAILING_ASSERT = """
id = "t-fail"
task = "certify-young"
seed = 1

[[young]]
label = "power2"
kind = "power"
p = 2.0
expect_delta2 = false
"""

CONFIG_NORMS = """
id = "t-norms"
task = "norms"
seed = 9

[grid]
dim = 1
n = 32

[[field]]
name = "noise"
generator = "random_smooth"
kmax = 4

[[young]]
label = "power2"
kind = "power"
p = 2.0
"""

CONFIG_BATCH_WITH_FAILURE = """
[[scenario]]
id = "will-fail"
task = "certify-young"
seed = 1

[[scenario.young]]
label = "power2"
kind = "power"
p = 2.0
expect_nabla2 = false

[[scenario]]
id = "will-pass"
task = "certify-young"
seed = 1

[[scenario.young]]
label = "power3"
kind = "power"
p = 3.0
expect_delta2 = true
"""


def write(tmp_path, text, name="config.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_run_pass_exit_zero(tmp_path):
    cfg = write(tmp_path, CONFIG_YOUNG)
    code = cli.main(["run", cfg, "--out", str(tmp_path / "out")])
    assert code == 0
    outdir = tmp_path / "out" / "t-young"
    assert (outdir / "certificates.csv").exists()
    assert (outdir / "certificates.png").exists()
    summary = json.loads((outdir / "summary.json").read_text())
    assert all(a["passed"] for a in summary["assertions"])


def test_config_error_exit_two(tmp_path):
    cfg = write(tmp_path, CONFIG_BAD_KEY)
    assert cli.main(["run", cfg, "--out", str(tmp_path / "out")]) == 2
    assert cli.main(["validate", cfg]) == 2


def test_parse_error_names_problem(tmp_path, capsys):
    cfg = write(tmp_path, "id = \n")
    assert cli.main(["validate", cfg]) == 2
    err = capsys.readouterr().err
    assert "TOML parse error" in err


def test_assertion_failure_exit_one(tmp_path):
    cfg = write(tmp_path, CONFIG_FAILING_ASSERT)
    assert cli.main(["run", cfg, "--out", str(tmp_path / "out")]) == 1


def test_validate_pass(tmp_path, capsys):
    cfg = write(tmp_path, CONFIG_YOUNG)
    assert cli.main(["validate", cfg]) == 0
    assert "1 scenario(s) valid" in capsys.readouterr().out


def test_list_catalog(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    assert "hilbert" in out
    assert "power" in out
    assert "laplacian" in out
    again = cli.main(["list"])
    assert again == 0
    assert capsys.readouterr().out == out  # catalog stable across calls


def test_determinism_byte_identical_csv(tmp_path):
    cfg = write(tmp_path, CONFIG_NORMS)
    cli.main(["run", cfg, "--out", str(tmp_path / "a"), "--no-plots"])
    cli.main(["run", cfg, "--out", str(tmp_path / "b"), "--no-plots"])
    a = (tmp_path / "a" / "t-norms" / "norms.csv").read_bytes()
    b = (tmp_path / "b" / "t-norms" / "norms.csv").read_bytes()
    assert a == b


def test_seed_override_changes_random_fields(tmp_path):
    cfg = write(tmp_path, CONFIG_NORMS)
    cli.main(["run", cfg, "--out", str(tmp_path / "a"), "--no-plots"])
    cli.main(["run", cfg, "--out", str(tmp_path / "b"), "--no-plots", "--seed", "12345"])
    a = (tmp_path / "a" / "t-norms" / "norms.csv").read_bytes()
    b = (tmp_path / "b" / "t-norms" / "norms.csv").read_bytes()
    assert a != b


def test_batch_isolation_and_aggregation(tmp_path):
    cfg = write(tmp_path, CONFIG_BATCH_WITH_FAILURE)
    code = cli.main(["run", cfg, "--out", str(tmp_path / "out")])
    assert code == 1  # one failed
    # the failing scenario did not block the passing one
    assert (tmp_path / "out" / "will-pass" / "certificates.csv").exists()
    assert (tmp_path / "out" / "will-fail" / "certificates.csv").exists()


def test_batch_threads(tmp_path):
    cfg = write(tmp_path, CONFIG_BATCH_WITH_FAILURE)
    code = cli.main(["run", cfg, "--out", str(tmp_path / "out"), "--threads", "2",
                     "--no-plots"])
    assert code == 1
    assert (tmp_path / "out" / "will-pass" / "summary.json").exists()


def test_duplicate_scenario_ids_rejected(tmp_path):
    text = CONFIG_BATCH_WITH_FAILURE.replace("will-pass", "will-fail")
    cfg = write(tmp_path, text)
    assert cli.main(["validate", cfg]) == 2


def test_shipped_configs_validate():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in os.listdir(root):
        if name.endswith(".toml"):
            assert cli.main(["validate", os.path.join(root, name)]) == 0
