"""Command-line front end.

Each command reads a plain ``key = value`` config file (``--config``) and/or
``--set key=value`` overrides, writes CSV/JSON files into ``--out`` and
embeds the resolved parameters and their SHA-256 hash in every file.

Exit codes: 0 success, 1 usage or config error, 2 numerical divergence.
"""
from __future__ import annotations

import argparse
import configparser
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from . import io as sio
from . import kernel, mild
from .core import (INF, DomainError, GridField, MixedExponents, ResolutionError, mixed_norm,
                   criticality, grid)
from .cutoff import CutoffFunction
from .solver import SolverConfig, energy_report, simulate
from .spectral import random_bandlimited

VERSION = "1"


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key '{key}': {message}")


def _number(text: str) -> float:
    text = text.strip().lower()
    if text in ("inf", "infinity"):
        return INF
    return float(Fraction(text)) if "/" in text else float(text)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _floats(text: str) -> tuple:
    return tuple(_number(p) for p in text.split(",") if p.strip())


def _pairs(text: str) -> tuple:
    """``q:q', q:q'`` lists."""
    out = []
    for item in text.split(","):
        q, qp = item.split(":")
        out.append((_number(q), _number(qp)))
    return tuple(out)


def _quads(text: str) -> tuple:
    """``k:l:l':r:r'`` entries separated by ``;``."""
    out = []
    for item in text.split(";"):
        parts = item.strip().split(":")
        if len(parts) != 5:
            raise ValueError(f"expected k:l:l':r:r', got {item!r}")
        out.append((int(parts[0]),) + tuple(_number(p) for p in parts[1:]))
    return tuple(out)


def _levels(text: str) -> tuple:
    out = []
    for item in text.split(","):
        n, f = item.lower().split("x")
        out.append((int(n), int(f)))
    return tuple(out)


DEFAULT_QUADS = ("3:5/3:5/3:5/3:5/3; 0:2:2:inf:inf; 3:inf:8:inf:inf; 1:2:2:4:4; "
                 "2:2:4:4:8; 3:2:2:2:4; 2:2:4/3:2:4; 3:1:2:inf:2")

SCHEMA = {
    "kernel-table": {
        "r_max": (float, "20"), "r_points": (int, "81"), "t_min": (float, "0.01"),
        "t_max": (float, "100"), "n_times": (int, "9"), "seed": (int, "0"),
    },
    "simulate": {
        "N": (int, "128"), "L": (float, "6.283185307179586"), "dt": (float, "0.001"),
        "T": (float, "0.1"), "scheme": (str, "etdrk4"), "dealias": (_bool, "true"),
        "nonlinear": (_bool, "true"), "save_every": (int, "1"), "initial": (str, "mode"),
        "amplitude": (float, "0.5"), "kappa": (int, "1"), "kmax": (int, "4"),
        "blowup": (float, "1e8"), "seed": (int, "0"),
    },
    "diagnose": {
        "checkpoint": (str, ""), "radii": (_floats, "0.5,0.3"), "eps0": (float, "0.1"),
        "stride": (int, "1"), "exponents": (_pairs, "3:3,inf:5,2:8"),
        "poincare_count": (int, "20"), "poincare_r": (float, "0.5"),
        "poincare_levels": (int, "1"), "seed": (int, "0"),
    },
    "picard": {
        "N": (int, "64"), "L": (float, "1.0"), "T": (float, "0.01"), "n_frames": (int, "41"),
        "q": (_number, "2"), "q_prime": (_number, "8"), "scale": (float, "0.5"),
        "tol": (float, "1e-8"), "max_iter": (int, "60"), "seed": (int, "0"),
    },
    "verify-estimates": {
        "quadruples": (_quads, DEFAULT_QUADS), "trials": (int, "12"),
        "levels": (_levels, "32x17,64x33,128x65"), "L": (float, "1.0"),
        "T": (float, "0.01"), "seed": (int, "0"),
    },
}


def load_config(command: str, path=None, overrides=()) -> tuple:
    """Resolve ``(parsed, raw)`` dictionaries for a command."""
    schema = SCHEMA[command]
    raw = {k: default for k, (_, default) in schema.items()}
    given = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
        parser.optionxform = str
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError("--config", str(exc)) from None
        try:
            parser.read_string("[config]\n" + text)
        except configparser.Error as exc:
            raise ConfigError("--config", f"unreadable config file ({exc.__class__.__name__})") from None
        given.update(parser["config"])
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(item, "override must look like key=value")
        given[key.strip()] = value.strip()
    for key, value in given.items():
        if key not in schema:
            raise ConfigError(key, f"unknown key for command '{command}'")
        raw[key] = value
    parsed = {}
    for key, (kind, _) in schema.items():
        try:
            parsed[key] = kind(raw[key])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(key, f"invalid value {raw[key]!r} ({exc})") from None
    return parsed, raw


def _meta(command: str, raw: dict) -> dict:
    meta = {"sgmlab": VERSION, "command": command}
    meta.update({k: raw[k] for k in sorted(raw)})
    meta["config_hash"] = sio.config_hash(dict(raw, command=command))
    return meta


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_kernel_table(cfg: dict, meta: dict, out: Path) -> int:
    if cfg["r_points"] < 2 or cfg["r_max"] <= 0:
        raise ConfigError("r_points", "need r_points >= 2 and r_max > 0")
    if not 0 < cfg["t_min"] < cfg["t_max"] or cfg["n_times"] < 2:
        raise ConfigError("t_min", "need 0 < t_min < t_max and n_times >= 2")
    r = np.linspace(0.0, cfg["r_max"], cfg["r_points"])
    prof = {k: kernel.eval_profile(r, k) for k in range(5)}
    rows = [dict(r=r[i], **{f"K{k}": prof[k][i] for k in range(5)}) for i in range(r.size)]
    sio.write_csv(out / "kernel_profile.csv", rows, meta)
    times = np.geomspace(cfg["t_min"], cfg["t_max"], cfg["n_times"])
    fits = []
    for k in range(4):
        for p in (1.0, 2.0, INF):
            slope = kernel.decay_slope(p, k, times)
            target = kernel.decay_exponent(p, k)
            fits.append(dict(k=k, p=p, slope=slope, target=target, deviation=abs(slope - target)))
    sio.write_csv(out / "decay_table.csv", fits, meta)
    c, l1 = kernel.normalization()
    sio.write_json(out / "kernel_summary.json", dict(
        meta=meta, c=c, l1_norm=l1, mass=kernel.DEFAULT.mass(1.0),
        max_deviation=max(f["deviation"] for f in fits)))
    return 0


def _initial(cfg: dict) -> GridField:
    N, L = cfg["N"], cfg["L"]
    kind = cfg["initial"]
    if kind == "zero":
        return GridField(np.zeros(N), L)
    if kind == "mode":
        return GridField(cfg["amplitude"] * np.sin(2 * np.pi * cfg["kappa"] * grid(N, L) / L), L)
    if kind == "random":
        f = random_bandlimited(np.random.default_rng(cfg["seed"]), N, L, cfg["kmax"]).samples
        return GridField(cfg["amplitude"] * f / np.max(np.abs(f)), L)
    raise ConfigError("initial", "must be one of zero, mode, random")


def cmd_simulate(cfg: dict, meta: dict, out: Path) -> int:
    try:
        config = SolverConfig(N=cfg["N"], L=cfg["L"], dt=cfg["dt"], T=cfg["T"],
                              dealias=cfg["dealias"], scheme=cfg["scheme"],
                              save_every=cfg["save_every"], nonlinear=cfg["nonlinear"],
                              blowup=cfg["blowup"])
        config.n_steps
    except DomainError as exc:
        raise ConfigError(_blame(str(exc), ("scheme", "save_every", "N", "dt")), str(exc)) from None
    u0 = _initial(cfg)
    try:
        result = simulate(u0, config)
    except DomainError as exc:
        raise ConfigError("save_every", str(exc)) from None
    traj = result.trajectory
    sio.write_checkpoint(out / "checkpoint.csv", traj, "u", meta)
    summary = dict(meta=meta, frames=traj.n_frames, final_time=float(traj.times[-1]),
                   stiffness=result.stiffness, diverged=result.diverged,
                   max_abs_mean=float(np.max(np.abs(traj.data.mean(axis=1)))))
    if traj.n_frames >= 3:
        er = energy_report(traj)
        rows = [dict(t=er.times[i], E=er.E[i], D=er.D[i], W=er.W[i], dEdt=er.dEdt[i],
                     residual=er.residual[i]) for i in range(traj.n_frames)]
        sio.write_csv(out / "energy.csv", rows, meta)
        summary["energy_relative_residual"] = er.relative_residual
    if result.divergence is not None:
        d = result.divergence
        summary["divergence"] = dict(time=d.time, last_finite_time=d.last_finite_time,
                                     max_abs_ux=d.max_abs_ux)
    sio.write_json(out / "simulate_summary.json", summary)
    return 2 if result.diverged else 0


def _blame(message: str, keys) -> str:
    for k in keys:
        if k in message:
            return k
    return keys[-1]


def cmd_diagnose(cfg: dict, meta: dict, out: Path) -> int:
    if not cfg["checkpoint"]:
        raise ConfigError("checkpoint", "a checkpoint path is required")
    try:
        traj, head = sio.read_checkpoint(cfg["checkpoint"])
    except (OSError, DomainError, KeyError, ValueError) as exc:
        raise ConfigError("checkpoint", str(exc)) from None
    kind = head.get("kind", "u")
    ux = diag.slope_field(traj, kind)
    rows = []
    try:
        sweep = diag.census_sweep(ux, cfg["radii"], cfg["eps0"], cfg["stride"], "ux")
    except (DomainError, ResolutionError) as exc:
        raise ConfigError("radii", str(exc)) from None
    for c in sweep.censuses:
        rows.extend(c.rows())
    sio.write_csv(out / "census.csv", rows, meta, ["x0", "t0", "r", "Y", "good"])
    serrin = []
    for q, qp in cfg["exponents"]:
        try:
            rep = diag.serrin_monitor(ux, MixedExponents(q, qp), kind="ux")
        except DomainError as exc:
            raise ConfigError("exponents", str(exc)) from None
        serrin.append(dict(q=q, q_prime=qp, norm=rep.norm, index=rep.index,
                           regime=rep.regime.value))
    sio.write_csv(out / "serrin.csv", serrin, meta)
    poincare = []
    if kind == "u" and cfg["poincare_count"] > 0:
        rng = np.random.default_rng(cfg["seed"])
        try:
            cyls = diag.dyadic_cylinders(traj, cfg["poincare_count"], rng, cfg["poincare_r"],
                                          max(1, cfg["poincare_levels"]))
            for Q in cyls:
                res = diag.poincare_residual(traj, Q, slope=ux)
                poincare.append(dict(x0=Q.x0, t0=Q.t0, r=Q.r, lhs=res.lhs, Y=res.Y,
                                     ratio=res.ratio))
        except (DomainError, ResolutionError) as exc:
            raise ConfigError("poincare_r", str(exc)) from None
        sio.write_csv(out / "poincare.csv", poincare, meta)
    sio.write_json(out / "diagnose_summary.json", dict(
        meta=meta, checkpoint_kind=kind,
        bad_counts=dict(zip([sio.fmt(r) for r in sweep.radii], sweep.bad_counts)),
        slope=sweep.slope, serrin=serrin,
        poincare_max_ratio=max((p["ratio"] for p in poincare), default=None)))
    return 0


def cmd_picard(cfg: dict, meta: dict, out: Path) -> int:
    N, L, T = cfg["N"], cfg["L"], cfg["T"]
    if cfg["n_frames"] < 3 or T <= 0:
        raise ConfigError("n_frames", "need n_frames >= 3 and T > 0")
    try:
        exps = MixedExponents(cfg["q"], cfg["q_prime"])
    except DomainError as exc:
        raise ConfigError("q", str(exc)) from None
    times = np.linspace(0.0, T, cfg["n_frames"])
    try:
        v = mild.random_small_field(np.random.default_rng(cfg["seed"]), N, L, times)
    except (DomainError, ValueError) as exc:
        raise ConfigError("N", str(exc)) from None
    threshold, C = mild.smallness_threshold(v, exps)
    v = v.with_data(v.data * cfg["scale"] * threshold / mixed_norm(v, exps))
    phi = CutoffFunction.box(0.3 * L, 0.7 * L, 0.3 * T, 0.7 * T, 0.1 * L, 0.2 * T, L)
    w, rep = mild.picard_solve(v, phi, exps, cfg["tol"], cfg["max_iter"], threshold=threshold)
    w0 = mild.duhamel_frames(mild.assemble_fv(v, phi), 0)
    w2, rep2 = mild.picard_solve(v, phi, exps, cfg["tol"], cfg["max_iter"],
                                 w_init=w0.with_data(2 * w0.data))
    sio.write_json(out / "picard.json", dict(
        meta=meta, operator_norm=C, threshold=threshold, smallness=rep.smallness,
        regime=criticality(exps)[1].value, iterates=rep.iterates,
        differences=rep.differences, ratios=rep.ratios, max_ratio=rep.max_ratio,
        converged=rep.converged,
        representation_residual=mild.representation_residual(w, v, phi),
        start_independence=float(np.max(np.abs(w.data - w2.data))),
        converged_from_double=rep2.converged))
    return 0


def cmd_verify_estimates(cfg: dict, meta: dict, out: Path) -> int:
    if cfg["trials"] < 10:
        raise ConfigError("trials", "at least 10 trials are required")
    rows, summary = [], []
    for quad in cfg["quadruples"]:
        k, l, lp, r, rp = quad
        try:
            table = mild.verify_convolution_estimate(k, l, lp, r, rp, cfg["trials"],
                                                     cfg["levels"], cfg["L"], cfg["T"],
                                                     cfg["seed"])
        except DomainError as exc:
            raise ConfigError("quadruples", str(exc)) from None
        rows.extend(table.rows())
        summary.append(dict(k=k, l=l, lp=lp, r=r, rp=rp, flag=table.flag,
                            sharp=table.sharp, not_sharp=table.not_sharp,
                            growth=table.growth, stable=table.stable))
    sio.write_csv(out / "estimates.csv", rows, meta)
    sio.write_json(out / "estimates_summary.json", dict(meta=meta, quadruples=summary))
    return 0


COMMANDS = {
    "kernel-table": cmd_kernel_table,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
    "picard": cmd_picard,
    "verify-estimates": cmd_verify_estimates,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sgmlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--out", default="sgmlab-out", help="output directory")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg, raw = load_config(args.command, args.config, args.set)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](cfg, _meta(args.command, raw), out)
    except ConfigError as exc:
        print(f"sgmlab: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
