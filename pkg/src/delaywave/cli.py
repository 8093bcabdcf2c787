"""Command-line driver: INI configuration, subcommands and CSV artifacts.

Exit status is 0 on success, 1 when a computation fails or a check does not
hold, and 2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import math
import re
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, DelayWaveError, FamilyError, ParseError, UnknownCommand, UnknownKey
from .nonlinearity import FAMILIES, characterize, make_family
from .profile_solver import ProfileOptions, continue_in_tau, solve_profile
from .scalar_wave import family_reaction, solve_nondelayed, speed_bounds

COMMANDS = ("validate", "wave0", "wave", "sweep", "spectrum", "simulate", "check")


@dataclass(frozen=True)
class Config:
    # [function]
    kappa: float = 0.0
    a: float = 1.2
    b: float = 3.0
    # [profile]
    L: float = 60.0
    n: int = 2401
    newton_tol: float = 1e-10
    max_iter: int = 40
    mode: str = "pinned"
    alpha: float = 0.5
    # [continuation]
    tau_max: float = 2.0
    dtau: float = 0.1
    # [sim]
    L_sim: float = 150.0
    dx: float = 0.05
    dt_target: float = 0.01
    t_final: float = 200.0
    # [spectrum]
    xi_max: float = 20.0
    n_xi: int = 4001

    def response(self):
        return make_family(self.kappa, self.a, self.b)

    def profile_options(self):
        return ProfileOptions(L=self.L, n=self.n, newton_tol=self.newton_tol,
                              max_iter=self.max_iter, mode=self.mode, alpha=self.alpha)


SECTIONS = {
    "function": ("kappa", "a", "b"),
    "profile": ("L", "n", "newton_tol", "max_iter", "mode", "alpha"),
    "continuation": ("tau_max", "dtau"),
    "sim": ("L_sim", "dx", "dt_target", "t_final"),
    "spectrum": ("xi_max", "n_xi"),
}
_TYPES = {f.name: f.type for f in fields(Config)}
_KEY_LINE = re.compile(r"^\s*([^=:\s][^=:]*?)\s*[=:]")
_SECTION_LINE = re.compile(r"^\s*\[([^\]]+)\]")


def _locate(text):
    """Map (section, key) to the 1-based line and value column where it is set."""
    where, section = {}, None
    for lineno, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_LINE.match(line)
        if m:
            section = m.group(1).strip()
            where[(section, None)] = (lineno, m.start(1) + 1)
            continue
        m = _KEY_LINE.match(line)
        if m and section is not None:
            sep = m.end() - 1
            rest = line[sep + 1:]
            col = sep + 1 + len(rest) - len(rest.lstrip()) + 1
            where[(section, m.group(1).strip().lower())] = (lineno, col)
    return where


def _convert(key, raw, loc):
    kind = _TYPES[key]
    if kind == "str":
        if raw not in ("pinned", "operator"):
            raise ParseError(f"mode must be 'pinned' or 'operator', got {raw!r}", *loc)
        return raw
    try:
        value = int(raw) if kind == "int" else float(raw)
    except ValueError:
        raise ParseError(f"{key} = {raw!r} is not a valid {kind}", *loc) from None
    if not math.isfinite(value):
        raise ParseError(f"{key} must be finite, got {raw!r}", *loc)
    return value


def _check_domain(cfg, where):
    def loc(section, key):
        return where.get((section, key.lower()), (None, None))

    positive = {
        "profile": ("L", "newton_tol", "max_iter", "alpha"),
        "continuation": ("tau_max", "dtau"),
        "sim": ("L_sim", "dx", "dt_target", "t_final"),
        "spectrum": ("xi_max", "n_xi"),
    }
    for section, keys in positive.items():
        for key in keys:
            if getattr(cfg, key) <= 0:
                raise ParseError(f"{key} must be positive, got {getattr(cfg, key)}", *loc(section, key))
    if cfg.n < 101 or cfg.n % 2 == 0:
        raise ParseError(f"n must be odd and at least 101, got {cfg.n}", *loc("profile", "n"))
    if not cfg.alpha < 1.0:
        raise ParseError(f"alpha must lie in (0, 1), got {cfg.alpha}", *loc("profile", "alpha"))
    try:
        cfg.response()
    except FamilyError as exc:
        msg = str(exc)
        key = "kappa" if msg.startswith("kappa") else "a" if msg.startswith(("a ", "f(0)")) else "b"
        raise ParseError(msg, *loc("function", key)) from None


def parse_config(text):
    """Parse INI text into a Config; omitted keys take their defaults.

    Raises
    ------
    ParseError
        Malformed text, non-numeric or out-of-domain values (with line number).
    UnknownKey
        A section or key that is not part of the schema.
    """
    parser = configparser.ConfigParser(interpolation=None, strict=True,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("key outside of any [section]", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ParseError(exc.message.split(":")[-1].strip() or str(exc), exc.lineno) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ParseError("expected 'key = value'", lineno) from None

    where = _locate(text)
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise UnknownKey(f"unknown section [{section}]", *where.get((section, None), (None, None)))
        allowed = {k.lower(): k for k in SECTIONS[section]}
        for key, raw in parser.items(section):
            loc = where.get((section, key.lower()), (None, None))
            if key.lower() not in allowed:
                raise UnknownKey(f"unknown key {key!r} in [{section}]", loc[0])
            name = allowed[key.lower()]
            values[name] = _convert(name, raw.strip(), loc)
    cfg = replace(Config(), **values)
    _check_domain(cfg, where)
    return cfg


# ---------------------------------------------------------------- output

def fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


@dataclass
class RunSummary:
    pairs: list = field(default_factory=list)
    status: int = 0
    artifacts: list = field(default_factory=list)

    def add(self, key, value):
        self.pairs.append((key, value))

    def text(self):
        lines = [f"{k}={fmt(v)}" for k, v in self.pairs]
        lines += [f"csv={p}" for p in self.artifacts]
        return "\n".join(lines)


def write_csv(path, header, columns):
    rows = zip(*columns)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return str(path)


def _emit(summary, out_dir, name, header, columns):
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        summary.artifacts.append(write_csv(Path(out_dir) / name, header, columns))


# ---------------------------------------------------------------- commands

def _validate(cfg, out_dir, tau):
    s = characterize(cfg.response())
    out = RunSummary()
    out.add("w0", s.w0)
    out.add("wstar", s.wstar)
    out.add("f0_breakpoint", s.f0_breakpoint)
    out.add("f1_breakpoint", s.f1_breakpoint)
    for chk in s.condition_report:
        out.add(chk.name, chk.passed)
    out.add("admissible", s.passes)
    out.status = 0 if s.passes else 1
    rows = s.as_rows()
    _emit(out, out_dir, "conditions.csv", ["condition", "passed", "witness"],
          [[r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows]])
    return out


def _wave0(cfg, out_dir, tau):
    f = cfg.response()
    F, dF = family_reaction(f)
    wave = solve_nondelayed(F, dF=dF, L=cfg.L, n=cfg.n, tag="f")
    b = speed_bounds(f)
    out = RunSummary()
    out.add("c", wave.c)
    out.add("bracket_width", wave.bracket_width)
    out.add("c0", b.c0)
    out.add("c1", b.c1)
    _emit(out, out_dir, "wave0.csv", ["x", "w", "dw"], [wave.x, wave.w, wave.dw])
    return out


def _wave(cfg, out_dir, tau):
    sol = solve_profile(cfg.response(), tau, opts=cfg.profile_options())
    out = RunSummary()
    out.add("tau", float(tau))
    out.add("c", sol.c)
    out.add("iterations", sol.iterations)
    out.add("residual", sol.residual)
    out.add("monotone", sol.monotone)
    out.add("gamma_plus", sol.gamma_plus)
    out.add("gamma_minus", sol.gamma_minus)
    out.add("norm_Emu", sol.norm_Emu)
    out.status = 0 if sol.monotone else 1
    _emit(out, out_dir, "profile.csv", ["x", "w", "dw"], [sol.x, sol.w, sol.dw])
    return out


def _sweep(cfg, out_dir, tau):
    f = cfg.response()
    b = speed_bounds(f)
    sw = continue_in_tau(f, cfg.tau_max, cfg.dtau, opts=cfg.profile_options(), bounds=b)
    out = RunSummary()
    out.add("steps", len(sw.solutions))
    out.add("c_final", sw.speeds[-1])
    out.add("max_norm_Emu", sw.max_norm)
    out.add("all_monotone", sw.all_monotone)
    out.add("c0", b.c0)
    out.add("c1", b.c1)
    bounds_ok = all(chk.ok for chk in sw.checks)
    out.add("bounds_ok", bounds_ok)
    out.status = 0 if bounds_ok and sw.all_monotone else 1
    sols = sw.solutions
    _emit(out, out_dir, "sweep.csv", ["tau", "c", "norm_Emu", "gamma_plus", "gamma_minus", "monotone"],
          [[s.tau for s in sols], [s.c for s in sols], [s.norm_Emu for s in sols],
           [s.gamma_plus for s in sols], [s.gamma_minus for s in sols], [s.monotone for s in sols]])
    return out


def _spectrum(cfg, out_dir, tau):
    from .spectrum import condition_ns, essential_curves

    f = cfg.response()
    sol = solve_profile(f, tau, opts=cfg.profile_options())
    rep = essential_curves(f, sol.c, tau, cfg.xi_max, cfg.n_xi)
    v = condition_ns(f, sol.c, tau, cfg.xi_max, cfg.n_xi)
    out = RunSummary()
    out.add("tau", float(tau))
    out.add("c", sol.c)
    out.add("ns", v.satisfied)
    out.add("margin", v.margin)
    out.status = 0 if v.satisfied else 1
    _emit(out, out_dir, "spectrum.csv", ["xi", "re_plus", "im_plus", "re_minus", "im_minus"],
          [rep.xi, rep.lam_plus.real, rep.lam_plus.imag, rep.lam_minus.real, rep.lam_minus.imag])
    return out


def _simulate(cfg, out_dir, tau):
    from .pde_sim import init, measure_speed, run

    n_sim = int(round(2.0 * cfg.L_sim / cfg.dx)) + 1
    st = init(cfg.response(), cfg.L_sim, n_sim, tau, cfg.dt_target)
    run(st, cfg.t_final)
    fit = measure_speed(st)
    out = RunSummary()
    out.add("tau", float(tau))
    out.add("dt", st.dt)
    out.add("c_sim", fit.c_sim)
    out.add("stderr", fit.stderr)
    t, xh = st.track()
    _emit(out, out_dir, "track.csv", ["t", "x_half"], [t, xh])
    _emit(out, out_dir, "final_profile.csv", ["x", "v"], [st.x, st.v])
    return out


def _check(cfg, out_dir, tau):
    from .acceptance import run_all

    results = run_all()
    out = RunSummary()
    for r in results:
        out.add(f"criterion_{r.number}", r.passed)
    failed = sum(not r.passed for r in results)
    out.add("passed", len(results) - failed)
    out.add("failed", failed)
    out.status = 0 if failed == 0 else 1
    _emit(out, out_dir, "check.csv", ["criterion", "title", "passed", "detail"],
          [[r.number for r in results], [r.title for r in results],
           [r.passed for r in results], [r.detail for r in results]])
    return out


_DISPATCH = {
    "validate": _validate,
    "wave0": _wave0,
    "wave": _wave,
    "sweep": _sweep,
    "spectrum": _spectrum,
    "simulate": _simulate,
    "check": _check,
}


def run_command(name, config=None, out_dir=None, tau=0.0):
    """Dispatch a subcommand; module errors propagate unchanged."""
    if name not in _DISPATCH:
        raise UnknownCommand(f"unknown command {name!r}; expected one of {', '.join(COMMANDS)}")
    return _DISPATCH[name](config or Config(), out_dir, float(tau))


# ---------------------------------------------------------------- entry point

def build_parser():
    p = argparse.ArgumentParser(prog="delaywave", description="Traveling fronts with delayed response.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--out-dir", help="directory for CSV artifacts (none written when omitted)")
    p.add_argument("--tau", type=float, default=0.0, help="delay for wave, spectrum and simulate")
    p.add_argument("--family", choices=sorted(FAMILIES), help="preset (kappa, a, b); overrides [function]")
    return p


def _fail(kind, exc, status):
    msg = " ".join(str(exc).split())
    print(f"error: {kind}: {msg}", file=sys.stderr)
    return status


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text() if args.config else ""
    except OSError as exc:
        return _fail("ConfigError", exc, 2)
    try:
        cfg = parse_config(text)
        if args.family:
            kappa, a, b = FAMILIES[args.family]
            cfg = replace(cfg, kappa=kappa, a=a, b=b)
        if args.tau < 0 or not math.isfinite(args.tau):
            raise ConfigError(f"--tau must be finite and nonnegative, got {args.tau}")
        summary = run_command(args.command, cfg, args.out_dir, args.tau)
    except (ConfigError, UnknownCommand) as exc:
        return _fail(type(exc).__name__, exc, 2)
    except DelayWaveError as exc:
        return _fail(type(exc).__name__, exc, 1)
    print(summary.text())
    return summary.status


if __name__ == "__main__":
    sys.exit(main())
