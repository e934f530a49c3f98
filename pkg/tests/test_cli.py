import io

import numpy as np
import pytest

from fracsob import cli, config, report, runner
from fracsob.config import ConfigError
from fracsob.domains import Ball, Box, HalfBall, HalfSpace, WholeSpace
from fracsob.fields import Grid


def run_cli(*argv):
    out = io.StringIO()
    code = cli.main(list(argv), out=out)
    return code, out.getvalue()


def write_cfg(tmp_path, text, name="exp.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


# ---------------------------------------------------------------- config parsing

def test_parse_text_resolves_defaults():
    cfg = config.parse_text("experiment = constants\nn = 1\nsigma = 0.25\n")
    assert cfg.seed == 0 and cfg.output == "out"
    assert cfg.params().n == 1
    assert "experiment = constants" in cfg.resolved_text()
    assert len(cfg.digest()) == 64


def test_digest_tracks_content():
    a = config.parse_text("experiment = constants\nn = 1\nsigma = 0.25\n")
    b = config.parse_text("# comment\n\nexperiment = constants\nsigma = 0.25\nn = 1\n")
    c = config.parse_text("experiment = constants\nn = 1\nsigma = 0.2\n")
    assert a.digest() == b.digest() != c.digest()


@pytest.mark.parametrize("text,line,msg", [
    ("experiment = constants\nbogus = 1\n", 2, "unknown key"),
    ("experiment = constants\nn 1\n", 2, "expected 'key = value'"),
    ("experiment = constants\nn = 1\nn = 2\n", 3, "duplicate key"),
])
def test_parse_errors_carry_line_numbers(text, line, msg):
    with pytest.raises(ConfigError, match=f"cfg:{line}: {msg}"):
        config.parse_text(text, "cfg")


def test_parse_requires_known_experiment():
    with pytest.raises(ConfigError, match="missing 'experiment'"):
        config.parse_text("n = 1\n")
    with pytest.raises(ConfigError, match="unknown experiment"):
        config.parse_text("experiment = nope\n")


def test_parse_domain_variants():
    assert isinstance(config.parse_domain("whole", 2), WholeSpace)
    assert isinstance(config.parse_domain("halfspace", 2), HalfSpace)
    assert isinstance(config.parse_domain("halfball 4", 3), HalfBall)
    assert isinstance(config.parse_domain("ball 0,0 1", 2), Ball)
    b = config.parse_domain("box -1,-2 1,2", 2)
    assert isinstance(b, Box) and tuple(b.hi) == (1.0, 2.0)
    for bad in ("box 0 1", "triangle", "ball 0,0 -1"):
        with pytest.raises(ConfigError):
            config.parse_domain(bad, 2)


def test_parse_ladder_variants():
    assert config.parse_ladder("1, 2, 4") == [1.0, 2.0, 4.0]
    assert config.parse_ladder("geom 8 2 4") == [8.0, 16.0, 32.0, 64.0]
    for bad in ("4, 2", "geom 8 1 4", "geom 8 2"):
        with pytest.raises(ConfigError):
            config.parse_ladder(bad)


def test_parse_grid_variants():
    assert config.parse_grid("", 1) is None
    assert config.parse_grid("48", 2) == 48
    g = config.parse_grid("-1,0 1,2 8,16", 2)
    assert isinstance(g, Grid) and g.shape == (8, 16)
    for bad in ("1", "0 1", "0 1 8,8"):
        with pytest.raises(ConfigError):
            config.parse_grid(bad, 1)


def test_load_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        config.load(tmp_path / "absent.cfg")


# ---------------------------------------------------------------- report helpers

def test_csv_schema_and_line_endings():
    text = report.quantity_csv([("a", 0.1), ("b", True)], digest="abc")
    lines = text.split("\n")
    assert lines[0] == "# config_sha256=abc"
    assert lines[1] == ",".join(report.QUANTITY_COLUMNS)
    assert lines[2] == "a,0.10000000000000001"
    assert "\r" not in text and text.endswith("\n")


def test_check_lines():
    c = report.within("x", 1.0, 1.05, rel=0.1)
    assert c.passed and c.line().endswith("PASS")
    assert not report.at_most("y", 2.0, 1.0).passed
    assert report.below("z", 1.0, 2.0).passed


def test_write_outputs_unwritable(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(report.ReportError):
        report.write_outputs(str(blocker / "sub"), {"a.csv": "x\n"})


# ---------------------------------------------------------------- commands

def test_print_constants():
    code, text = run_cli("print-constants", "--n", "1", "--sigma", "0.25")
    assert code == cli.EXIT_OK
    assert "kappa = 4" in text
    assert "reference_quotient = 8.49459309193412" in text


def test_print_constants_invalid_params(capsys):
    code, _ = run_cli("print-constants", "--n", "1", "--sigma", "0.7")
    assert code == cli.EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_usage_errors():
    assert run_cli()[0] == cli.EXIT_USAGE
    assert run_cli("frobnicate")[0] == cli.EXIT_USAGE
    assert run_cli("verify", "--only", "x")[0] == cli.EXIT_USAGE
    assert run_cli("verify", "--only", "99")[0] == cli.EXIT_USAGE


def test_run_bad_config_reports_line(tmp_path, capsys):
    path = write_cfg(tmp_path, "experiment = constants\nwat = 3\n")
    assert run_cli("run", path)[0] == cli.EXIT_USAGE
    assert f"{path}:2: unknown key 'wat'" in capsys.readouterr().err


def test_run_constants_outputs_and_determinism(tmp_path):
    out = tmp_path / "out"
    path = write_cfg(tmp_path, f"experiment = constants\nn = 1\nsigma = 0.25\noutput = {out}\n")
    code, text = run_cli("run", path)
    assert code == cli.EXIT_OK and "reference-vs-closed-form" in text
    files = sorted(p.name for p in out.iterdir())
    assert files == ["config.txt", "constants.csv", "report.txt"]
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert first["constants.csv"].startswith(b"# config_sha256=")
    assert b"\r" not in first["constants.csv"]
    assert run_cli("run", path)[0] == cli.EXIT_OK
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first


def test_run_unwritable_output(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    path = write_cfg(tmp_path, f"experiment = constants\nn = 1\nsigma = 0.25\noutput = {blocker}/o\n")
    assert run_cli("run", path)[0] == cli.EXIT_USAGE
    assert "error:" in capsys.readouterr().err


def test_failing_claim_exits_two(tmp_path, monkeypatch):
    fail = lambda cfg: ({}, [report.holds("forced", False)])
    monkeypatch.setitem(runner.RUNNERS, "constants", fail)
    path = write_cfg(tmp_path, f"experiment = constants\noutput = {tmp_path / 'o'}\n")
    code, text = run_cli("run", path)
    assert code == cli.EXIT_FAIL and "forced" in text and "FAIL" in text


def test_scan_csv_schema(tmp_path):
    out = tmp_path / "t"
    path = write_cfg(tmp_path, "experiment = translate-limit\nn = 1\nsigma = 0.25\n"
                               f"ladder = geom 4 2 4\noutput = {out}\n")
    assert run_cli("run", path)[0] == cli.EXIT_OK
    lines = (out / "translate_limit.csv").read_text().split("\n")
    assert lines[1] == ",".join(report.SCAN_COLUMNS)
    assert [float(l.split(",")[0]) for l in lines[2:6]] == [4.0, 8.0, 16.0, 32.0]


def test_solve_checkpoint_then_envelope_fit(tmp_path):
    out = tmp_path / "solve"
    path = write_cfg(tmp_path, "experiment = solve\nn = 1\nsigma = 0.2\ndomain = halfspace\n"
                               f"grid = 0 16 128\ncheckpoint = theta.txt\noutput = {out}\n")
    code, text = run_cli("run", path)
    assert code == cli.EXIT_OK, text
    ck = out / "theta.txt"
    assert ck.exists()
    path2 = write_cfg(tmp_path, "experiment = envelope-fit\n"
                                f"checkpoint = {ck}\noutput = {tmp_path / 'fit'}\n", "fit.cfg")
    code, text = run_cli("run", path2)
    assert code == cli.EXIT_OK, text
    rows = dict(l.split(",") for l in (tmp_path / "fit" / "envelope_fit.csv").read_text().split("\n")[2:] if l)
    assert rows["proven_regime"] == "false"
    assert float(rows["c_lower"]) <= float(rows["c_upper"])


def test_verify_subset(tmp_path):
    out = tmp_path / "v"
    code, text = run_cli("verify", "--output", str(out), "--only", "1,2")
    assert code == cli.EXIT_OK
    assert "criterion  1 (constants): PASS" in text
    summary = (out / "summary.csv").read_text().split("\n")
    assert summary[2:4] == ["criterion_1,PASS", "criterion_2,PASS"]


def test_shipped_configs_parse():
    import pathlib
    root = pathlib.Path(__file__).resolve().parents[1] / "configs"
    cfgs = sorted(root.glob("*.cfg"))
    assert len(cfgs) >= 10
    for p in cfgs:
        cfg = config.load(p)
        assert cfg.experiment in config.EXPERIMENTS
        if cfg["n"]:
            cfg.params()
        if cfg["domain"]:
            config.parse_domain(cfg["domain"], int(cfg["n"]))
        if cfg["ladder"]:
            config.parse_ladder(cfg["ladder"])
