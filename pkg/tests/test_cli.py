import subprocess
import sys

import pytest
from hypothesis import given
from hypothesis import strategies as st

from delaywave.cli import Config, fmt, main, parse_config, run_command
from delaywave.errors import ParseError, UnknownCommand, UnknownKey


def test_empty_config_gives_defaults():
    cfg = parse_config("")
    assert cfg == Config()
    assert (cfg.kappa, cfg.a, cfg.b) == (0.0, 1.2, 3.0)
    assert cfg.L == 60.0 and cfg.n == 2401 and cfg.mode == "pinned"


def test_family_b_parameters():
    cfg = parse_config("[function]\nkappa = 0.5\na = 0.8\nb = 2.6\n")
    f = cfg.response()
    assert f(1.0, 1) == pytest.approx(-0.5)
    assert (f.kappa, f.a, f.b) == (0.5, 0.8, 2.6)


def test_domain_violation_has_line_and_column():
    with pytest.raises(ParseError) as exc:
        parse_config("# comment\n[function]\nkappa = -1\n")
    assert exc.value.line == 3
    assert exc.value.column == 9
    assert str(exc.value).startswith("line 3, column 9:")


def test_unknown_key_has_line():
    with pytest.raises(UnknownKey) as exc:
        parse_config("[profile]\nL = 40\nnn = 3\n")
    assert exc.value.line == 3


def test_unknown_section():
    with pytest.raises(UnknownKey) as exc:
        parse_config("[function]\nkappa = 0\n[solver]\nx = 1\n")
    assert exc.value.line == 3


@pytest.mark.parametrize(
    "text,line",
    [
        ("kappa = 0\n", 1),
        ("[profile]\nn = 12.5\n", 2),
        ("[profile]\nL = inf\n", 2),
        ("[profile]\nmode = adaptive\n", 2),
        ("[profile]\nL = 1\nL = 2\n", 3),
        ("[sim]\ndx = 0\n", 2),
        ("[profile]\nn = 2400\n", 2),
        ("[function]\nb = 2.0\n", 2),
        ("[function]\nnot a pair\n", 2),
    ],
)
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as exc:
        parse_config(text)
    assert exc.value.line == line


config_values = st.fixed_dictionaries(
    {
        "kappa": st.floats(0.0, 0.9),
        "L": st.floats(10.0, 100.0),
        "n": st.integers(60, 3000).map(lambda k: 2 * k + 1),
        "newton_tol": st.floats(1e-14, 1e-6),
        "mode": st.sampled_from(["pinned", "operator"]),
        "dtau": st.floats(0.01, 1.0),
        "t_final": st.floats(1.0, 500.0),
        "n_xi": st.integers(11, 10001),
    }
)


@given(config_values)
def test_config_round_trip(vals):
    kappa = vals["kappa"]
    a = 1.2 - kappa + 0.1
    b = kappa + 2 * a + 0.5
    text = (
        f"[function]\nkappa = {fmt(kappa)}\na = {fmt(a)}\nb = {fmt(b)}\n"
        f"[profile]\nL = {fmt(vals['L'])}\nn = {vals['n']}\nnewton_tol = {fmt(vals['newton_tol'])}\n"
        f"mode = {vals['mode']}\n"
        f"[continuation]\ndtau = {fmt(vals['dtau'])}\n"
        f"[sim]\nt_final = {fmt(vals['t_final'])}\n"
        f"[spectrum]\nn_xi = {vals['n_xi']}\n"
    )
    cfg = parse_config(text)
    assert (cfg.kappa, cfg.a, cfg.b) == (kappa, a, b)
    for key, value in vals.items():
        assert getattr(cfg, key) == value


@given(st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_float_format_round_trips(x):
    assert float(fmt(x)) == x


def test_validate_defaults():
    s = run_command("validate")
    pairs = dict(s.pairs)
    assert pairs["admissible"] is True
    assert s.status == 0
    assert all(v for k, v in s.pairs if k.startswith(("f_", "slope_", "single_", "decreasing_")))


def test_wave_summary(tmp_path):
    s = run_command("wave", Config(), tmp_path, tau=0.5)
    text = s.text()
    assert "c=" in text and "monotone=true" in text and "iterations=" in text and "residual=" in text
    header = (tmp_path / "profile.csv").read_text().splitlines()[0]
    assert header == "x,w,dw"


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    s1 = run_command("wave0", Config(), a)
    s2 = run_command("wave0", Config(), b)
    assert s1.text().replace(str(a), "") == s2.text().replace(str(b), "")
    assert (a / "wave0.csv").read_bytes() == (b / "wave0.csv").read_bytes()


def test_spectrum_command(tmp_path):
    s = run_command("spectrum", Config(), tmp_path, tau=1.0)
    pairs = dict(s.pairs)
    assert pairs["ns"] is True and pairs["margin"] > 0
    assert "ns=true margin=" in s.text().replace("\n", " ")
    assert (tmp_path / "spectrum.csv").read_text().startswith("xi,re_plus,im_plus,re_minus,im_minus\n")


def test_unknown_command():
    with pytest.raises(UnknownCommand):
        run_command("plot")


def test_check_command_reports_zero_failures():
    s = run_command("check")
    pairs = dict(s.pairs)
    assert pairs["failed"] == 0 and pairs["passed"] == 11
    assert s.status == 0


# ---------------------------------------------------------------- entry point

def test_main_success(capsys):
    assert main(["validate", "--family", "B"]) == 0
    out = capsys.readouterr().out
    assert "admissible=true" in out


def test_main_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[function]\nkappa = -1\n")
    assert main(["validate", "--config", str(cfg)]) == 2
    err = capsys.readouterr().err.strip()
    assert err.count("\n") == 0
    assert err.startswith("error: ParseError: line 2")


def test_main_missing_config(capsys):
    assert main(["validate", "--config", "/nonexistent/x.ini"]) == 2


def test_main_computation_failure(tmp_path, capsys):
    cfg = tmp_path / "sim.ini"
    cfg.write_text("[sim]\ndt_target = 1.0\nL_sim = 10\n")
    assert main(["simulate", "--config", str(cfg), "--tau", "0.2"]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: InvalidStep:") and "\n" not in err


def test_main_negative_tau(capsys):
    assert main(["wave", "--tau", "-1"]) == 2


def test_usage_error_exit_status():
    with pytest.raises(SystemExit) as exc:
        main(["bogus"])
    assert exc.value.code == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "delaywave", "validate"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "w0=0.6958114029012" in res.stdout
