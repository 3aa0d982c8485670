"""Batch front-end: experiment configs in, CSV/JSON/SVG artifacts out.

Subcommands: check-symbol, solve, kernel-scan, decay-verify, regions, all.
Configuration is layered: built-in defaults < INI config file < CLI flags.
Exit status: 0 when every check passes, 1 on failed verdicts, 2 on
usage/config errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import decay, kernel, regions, spectral, symbol

VERSION = "0.1.0"

OK_VERDICTS = {"pass", "consistent"}


class ConfigError(ValueError):
    """Bad config file or flag value; maps to exit code 2."""


@dataclass
class ExperimentConfig:
    """Layered experiment configuration: defaults, then INI file, then flags.

    Sections and keys are fixed by DEFAULTS; anything else in a config
    file is rejected with the offending field named.
    """

    sections: dict = field(default_factory=dict)

    def __getitem__(self, section):
        return self.sections[section]

    def as_dict(self) -> dict:
        return self.sections


DEFAULTS = {
    "run": {"seed": "0", "threads": ""},
    "symbol": {"poly": "1 + |x|^4", "n": "2", "m_expect": ""},
    "grid": {"N": "64", "L": "12.0"},
    "solve": {"t_list": "0.5,1.0,2.0", "q": "4", "width": "1.5"},
    "kernel": {
        "kind": "I1", "sign": "+", "t_list": "0.25,0.5",
        "x_list": "0.0,1.0", "eps_list": "0.4,0.2,0.1", "N": "512",
        "order": "2", "method": "lattice",
    },
    "decay": {
        "part": "V", "regime": "small", "p": "2", "q": "2",
        "route": "multiplier", "t_count": "9", "N": "64", "L": "12.0",
    },
    "regions": {"kind": "all", "m": "4", "n": "6", "a": ""},
}


def load_config(path=None) -> ExperimentConfig:
    sections = {sec: dict(keys) for sec, keys in DEFAULTS.items()}
    cfg = ExperimentConfig(sections)
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    parser.optionxform = str  # keys are case-sensitive (N vs n)
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path}")
    for sec in parser.sections():
        if sec not in sections:
            raise ConfigError(f"unknown config section [{sec}]")
        for key, value in parser.items(sec):
            if key not in sections[sec]:
                raise ConfigError(f"unknown key {key!r} in section [{sec}]")
            sections[sec][key] = value
    return cfg


def _floats(text):
    try:
        return [float(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated float list, got {text!r}") from exc


def _int(cfg, sec, key):
    try:
        return int(cfg[sec][key])
    except ValueError as exc:
        raise ConfigError(f"field {sec}.{key} must be an integer, "
                          f"got {cfg[sec][key]!r}") from exc


def _float(cfg, sec, key):
    try:
        return float(cfg[sec][key])
    except ValueError as exc:
        raise ConfigError(f"field {sec}.{key} must be a number, "
                          f"got {cfg[sec][key]!r}") from exc


def _threads(cfg) -> int:
    raw = cfg["run"]["threads"] or os.environ.get("DDLAB_THREADS", "") or "1"
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"thread count must be an integer, got {raw!r}") from exc


def _write_json(path, obj):
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Subcommand pipelines.  Each returns (checks, artifacts) where checks is a
# list of {"name", "verdict", "details"} dicts.
# ---------------------------------------------------------------------------

def _parse_symbol(cfg):
    n = _int(cfg, "symbol", "n")
    try:
        p = symbol.parse_symbol(cfg["symbol"]["poly"], n)
    except symbol.SymbolError as exc:
        raise ConfigError(f"field symbol.poly: {exc}") from exc
    expect = cfg["symbol"]["m_expect"]
    if expect.strip():
        if p.order != int(expect):
            raise ConfigError(
                f"field symbol.m_expect: symbol has order {p.order}, expected {expect}")
    return p


def cmd_check_symbol(cfg, outdir):
    p = _parse_symbol(cfg)
    scfg = symbol.SamplingConfig(seed=_int(cfg, "run", "seed"))
    h1 = symbol.check_H1(p, scfg)
    checks = [{
        "name": "H1",
        "verdict": "pass" if h1.passed else "fail",
        "details": {
            "sampled_min": h1.sampled_min,
            "description": h1.description,
            "witnesses": [{"kind": w.kind, "point": w.point, "value": w.value}
                          for w in h1.witnesses],
        },
    }]
    h2 = symbol.check_H2(p, scfg)
    checks.append({
        "name": "H2",
        "verdict": "pass" if h2.passed else "fail",
        "details": {
            "sphere_min_abs_det": h2.sampled_min,
            "sphere_max_abs_det": h2.sampled_max,
            "flags": list(h2.flags),
            "witnesses": [{"kind": w.kind, "point": w.point, "value": w.value}
                          for w in h2.witnesses],
        },
    })
    return checks, {}


def cmd_solve(cfg, outdir):
    p = _parse_symbol(cfg)
    g = spectral.make_grid(p.n, _int(cfg, "grid", "N"), _float(cfg, "grid", "L"))
    width = _float(cfg, "solve", "width")
    xs = g.x_grids()
    u0 = np.exp(-sum(x**2 for x in xs) / (2.0 * width**2)).astype(complex)
    u1 = np.zeros(g.shape, dtype=complex)
    q_text = cfg["solve"]["q"]
    q = math.inf if q_text.strip() == "inf" else float(q_text)
    rows = []
    e0 = None
    drift = 0.0
    clear = 1.0
    for t in _floats(cfg["solve"]["t_list"]):
        state = spectral.propagate(u0, u1, t, p, g)
        e = spectral.energy(state, p, g)
        e0 = e if e0 is None else e0
        drift = max(drift, abs(e - e0) / max(e0, 1e-300))
        clear = min(clear, spectral.box_clearance(state.u, g))
        rows.append((t,
                     decay.lq_norm(state.u, 2, g),
                     decay.lq_norm(state.u, q, g),
                     decay.lq_norm(state.u, math.inf, g)))
    spectral.write_norm_series(outdir / "norms.csv", rows)
    tail = spectral.spectral_tail_fraction(u0, g)
    checks = [{
        "name": "energy-conservation",
        "verdict": "pass" if drift <= 1e-9 else "fail",
        "details": {"relative_drift": drift, "clearance": clear,
                    "nyquist_tail": tail, "norm_q": q_text},
    }]
    return checks, {"norms.csv": "t,l2,lq,linf series"}


def cmd_kernel_scan(cfg, outdir):
    p = _parse_symbol(cfg)
    sign = +1 if cfg["kernel"]["sign"].strip() in ("+", "+1", "1") else -1
    qcfg = kernel.QuadConfig(
        eps_list=tuple(_floats(cfg["kernel"]["eps_list"])),
        order=_int(cfg, "kernel", "order"),
        lattice_N=_int(cfg, "kernel", "N"),
        method=cfg["kernel"]["method"],
    )
    kind = cfg["kernel"]["kind"]
    if kind not in kernel.KINDS:
        raise ConfigError(f"field kernel.kind must be I1 or I2, got {kind!r}")
    samples = []
    e1 = np.eye(p.n)[0]
    for t in _floats(cfg["kernel"]["t_list"]):
        tcfg = kernel.scaled_config(qcfg, t)
        for r in _floats(cfg["kernel"]["x_list"]):
            samples.append(kernel.eval_kernel(p, kind, sign, t, r * e1, tcfg))
    kernel.samples_to_csv(outdir / "samples.csv", samples)
    report = kernel.check_bound(samples, p)
    _write_json(outdir / "kernel_bounds.json", kernel.bound_report_dict(report))
    flagged = sum(1 for s in samples if s.flagged)
    checks = [{
        "name": "kernel-scan",
        "verdict": "pass" if flagged == 0 else "fail",
        "details": {"samples": len(samples), "flagged": flagged,
                    "bounds": kernel.bound_report_dict(report)},
    }]
    return checks, {"samples.csv": "kernel samples",
                    "kernel_bounds.json": "envelope report"}


def cmd_decay_verify(cfg, outdir):
    p = _parse_symbol(cfg)
    qr = decay.ExponentQuery(
        part=cfg["decay"]["part"], regime=cfg["decay"]["regime"],
        p=Fraction(cfg["decay"]["p"]),
        q=(math.inf if cfg["decay"]["q"].strip() == "inf"
           else Fraction(cfg["decay"]["q"])),
        m=p.order, n=p.n, route=cfg["decay"]["route"],
    )
    g = spectral.make_grid(p.n, _int(cfg, "decay", "N"), _float(cfg, "decay", "L"))
    lo, hi = decay.DEFAULT_WINDOWS[qr.regime]
    t_grid = np.geomspace(lo, hi, _int(cfg, "decay", "t_count"))
    report = decay.verify_lp_lq(p, qr, grid=g, t_grid=t_grid)
    _write_json(outdir / "decay_report.json", report.to_dict())
    spectral.write_norm_series(outdir / "norms.csv", report.norm_rows)
    checks = [{
        "name": "decay-verify",
        "verdict": report.verdict,
        "details": report.to_dict(),
    }]
    return checks, {"decay_report.json": "exponent comparison",
                    "norms.csv": "normalized output-norm series"}


def cmd_regions(cfg, outdir):
    m = _int(cfg, "regions", "m")
    n = _int(cfg, "regions", "n")
    kind = cfg["regions"]["kind"]
    a_text = cfg["regions"]["a"].strip()
    a = Fraction(a_text) if a_text else None
    try:
        if kind == "all":
            built = [regions.build_region("delta_m", m, n),
                     regions.build_region("AEF", m, n),
                     regions.build_region("hexagon", m, n)]
        else:
            built = [regions.build_region(kind, m, n, a=a)]
    except regions.RegionError as exc:
        raise ConfigError(f"field regions.kind: {exc}") from exc
    payload = [regions.region_to_dict(r) for r in built]
    _write_json(outdir / "regions.json", payload if len(payload) > 1 else payload[0])
    with open(outdir / "regions.svg", "w", encoding="ascii") as fh:
        fh.write(regions.regions_svg(built))
    checks = [{
        "name": f"regions({r.kind})",
        "verdict": "pass",
        "details": regions.region_to_dict(r),
    } for r in built]
    return checks, {"regions.json": "vertex lists", "regions.svg": "index square"}


def cmd_all(cfg, outdir):
    checks, artifacts = [], {}
    for fn in (cmd_check_symbol, cmd_solve, cmd_kernel_scan, cmd_decay_verify,
               cmd_regions):
        c, a = fn(cfg, outdir)
        checks.extend(c)
        artifacts.update(a)
    return checks, artifacts


COMMANDS = {
    "check-symbol": cmd_check_symbol,
    "solve": cmd_solve,
    "kernel-scan": cmd_kernel_scan,
    "decay-verify": cmd_decay_verify,
    "regions": cmd_regions,
    "all": cmd_all,
}

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="INI config file")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--seed", default=None)
    common.add_argument("--threads", default=None)
    common.add_argument("--poly", default=None, help="symbol literal")
    common.add_argument("--n", default=None, help="space dimension")
    common.add_argument("--m-expect", dest="m_expect", default=None)
    common.add_argument("--grid-N", dest="grid_N", default=None)
    common.add_argument("--grid-L", dest="grid_L", default=None)
    common.add_argument("--t-list", dest="t_list", default=None)
    common.add_argument("--eps-list", dest="eps_list", default=None)

    parser = argparse.ArgumentParser(
        prog="ddlab",
        description="verification lab for wave-type equations u_tt + P(D)u = 0")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("check-symbol", parents=[common])
    sub.add_parser("solve", parents=[common])
    ker = sub.add_parser("kernel-scan", parents=[common])
    ker.add_argument("--kind", default=None)
    ker.add_argument("--x-list", dest="x_list", default=None)
    dec = sub.add_parser("decay-verify", parents=[common])
    dec.add_argument("--part", default=None)
    dec.add_argument("--regime", default=None)
    dec.add_argument("--p", default=None)
    dec.add_argument("--q", default=None)
    dec.add_argument("--route", default=None)
    reg = sub.add_parser("regions", parents=[common])
    reg.add_argument("--kind", default=None)
    reg.add_argument("--m", default=None)
    reg.add_argument("--a", default=None)
    sub.add_parser("all", parents=[common])
    return parser


def _apply_flags(cfg, args):
    cmd = args.command
    simple = {
        "poly": ("symbol", "poly"),
        "m_expect": ("symbol", "m_expect"),
        "grid_N": ("grid", "N"),
        "grid_L": ("grid", "L"),
        "seed": ("run", "seed"),
        "threads": ("run", "threads"),
    }
    for attr, target in simple.items():
        val = getattr(args, attr, None)
        if val is not None:
            cfg[target[0]][target[1]] = str(val)
    if getattr(args, "n", None) is not None:
        cfg["symbol"]["n"] = str(args.n)
        cfg["regions"]["n"] = str(args.n)
    if getattr(args, "t_list", None) is not None:
        sec = "kernel" if cmd == "kernel-scan" else "solve"
        cfg[sec]["t_list"] = str(args.t_list)
    if getattr(args, "eps_list", None) is not None:
        cfg["kernel"]["eps_list"] = str(args.eps_list)
    if getattr(args, "kind", None) is not None:
        sec = "kernel" if cmd == "kernel-scan" else "regions"
        cfg[sec]["kind"] = str(args.kind)
    if getattr(args, "x_list", None) is not None:
        cfg["kernel"]["x_list"] = str(args.x_list)
    for attr in ("part", "regime", "p", "q", "route"):
        val = getattr(args, attr, None)
        if val is not None:
            cfg["decay"][attr] = str(val)
    if getattr(args, "m", None) is not None:
        cfg["regions"]["m"] = str(args.m)
    if getattr(args, "a", None) is not None:
        cfg["regions"]["a"] = str(args.a)


def run(argv) -> int:
    """Parse argv, execute the subcommand, write artifacts, return exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        _apply_flags(cfg, args)
        threads = _threads(cfg)
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        checks, artifacts = COMMANDS[args.command](cfg, outdir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (symbol.SymbolError, regions.RegionError, decay.NormError,
            kernel.KernelConfigError, spectral.GridError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    report = {
        "tool": "ddlab",
        "version": VERSION,
        "command": args.command,
        "threads": threads,
        "config": cfg.as_dict(),
        "checks": checks,
        "artifacts": sorted(artifacts),
    }
    _write_json(outdir / "report.json", report)
    ok = True
    for check in checks:
        verdict = check["verdict"]
        print(f"{args.command} {check['name']}: {verdict}")
        ok = ok and verdict in OK_VERDICTS
    return 0 if ok else 1


def main():
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
