import csv
import io

import pytest

from denjoy_lab.cli import main
from denjoy_lab.config import RunConfig, parse_config
from denjoy_lab.errors import ConfigError

DESK = """\
# small desk system
[system]
d = 2
taus = 0.4, 0.35
rhos = 0.6180339887, 0.4142135624
window = 8
[checks]
iterations = 500
holder_samples = 500
samples = 100
f_radius = 10
M0 = 4
"""


def test_parse_defaults():
    cfg = parse_config("d = 2\ntaus = 0.6, 0.55\n")
    assert cfg == RunConfig(d=2, taus=(0.6, 0.55))
    assert cfg.window == 20 and cfg.seed == 0 and cfg.rhos == ()
    assert cfg.with_overrides(seed=4, out=None).seed == 4


def test_parse_desk():
    cfg = parse_config(DESK)
    assert cfg.taus == (0.4, 0.35) and cfg.window == 8 and cfg.M0 == 4


@pytest.mark.parametrize("text, line, needle", [
    ("d = 2\ntaus = 0.4, 0.35\nbogus = 1\n", 3, "unknown key"),
    ("d = 2\ntaus = 0.4, 0.35\nd = 3\n", 3, "duplicate"),
    ("d = 2\ntaus = 0.4\n", 2, "taus"),
    ("d = 2\ntaus = 0.4, 0.35\nrhos = 0.1, 1.5\n", 3, "rhos"),
    ("d = 2\ntaus = 0.4, x\n", 2, "malformed"),
    ("d = 2\ntaus = 0.4, 0.35\nwindow = 0\n", 3, "window"),
    ("d = 2\njunk\n", 2, "key = value"),
])
def test_parse_errors_carry_line(text, line, needle):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.line == line
    assert needle in str(exc.value)


def test_missing_required_key():
    with pytest.raises(ConfigError):
        parse_config("d = 2\n")


def _write(tmp_path, text):
    p = tmp_path / "run.cfg"
    p.write_text(text, encoding="utf-8")
    return str(p)


def _rows(path):
    return list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))


@pytest.mark.parametrize("command", ["construct", "verify", "path-search", "distortion", "rotnum"])
def test_commands_exit_zero(tmp_path, command):
    out = tmp_path / "out"
    assert main([command, "--config", _write(tmp_path, DESK), "--out", str(out)]) == 0
    rows = _rows(out / "report.csv")
    assert len(rows) > 1
    if command == "construct":
        assert (out / "plot.svg").read_text().startswith("<svg")
        values = {r[0]: float(r[1]) for r in rows[1:]}
        assert values["condition_F_max"] <= values["condition_F_bound"]


def test_verify_report_contents(tmp_path):
    out = tmp_path / "out"
    main(["verify", "--config", _write(tmp_path, DESK), "--out", str(out)])
    values = {r[0]: float(r[1]) for r in _rows(out / "report.csv")[1:]}
    assert values["condition_F_ok"] == 1.0
    assert values["commutation_index_mismatches"] == 0.0
    assert values["commutation_max_dt"] <= 1e-12
    assert values["wandering_symbolic_ok"] == 1.0


def test_supercritical_path_search(tmp_path):
    out = tmp_path / "out"
    cfg = "d = 2\ntaus = 0.6, 0.55\nM0 = 6\n"
    assert main(["path-search", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    values = {r[0]: float(r[1]) for r in _rows(out / "report.csv")[1:]}
    assert values["path_weight"] <= values["S_stagewise"]
    assert values["terminal_run"] >= values["terminal_run_required"]


def test_regime_violation_exit_two(tmp_path, capsys):
    cfg = "d = 2\ntaus = 0.6, 0.55\nrhos = 0.6180339887, 0.4142135624\n"
    assert main(["construct", "--config", _write(tmp_path, cfg), "--out", str(tmp_path)]) == 2
    assert "denjoy-lab:" in capsys.readouterr().err
    assert not (tmp_path / "report.csv").exists()


def test_bad_input_exit_two(tmp_path):
    assert main(["construct", "--config", str(tmp_path / "missing.cfg")]) == 2
    assert main(["verify", "--config", _write(tmp_path, "d = 2\ntaus = 0.4, 0.35\n")]) == 2
    assert main(["construct", "--config", _write(tmp_path, "d = 2\ntaus = 0.4\n")]) == 2


def test_unknown_command_rejected(tmp_path):
    with pytest.raises(SystemExit):
        main(["explode", "--config", _write(tmp_path, DESK)])


def test_report_is_deterministic(tmp_path):
    cfg = _write(tmp_path, DESK)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["report", "--config", cfg, "--out", str(a), "--seed", "7"]) == 0
    assert main(["report", "--config", cfg, "--out", str(b), "--seed", "7"]) == 0
    assert (a / "report.csv").read_bytes() == (b / "report.csv").read_bytes()
    assert (a / "plot.svg").read_bytes() == (b / "plot.svg").read_bytes()
    header = _rows(a / "report.csv")[0]
    assert header == ["section", "quantity", "value", "error_budget"]
