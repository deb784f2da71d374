"""Command-line interface: ``fracinv ml|spectrum|forward|invert-source|invert-potential|sweep``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .. import mlf
from ..inverse import FloorViolation, reconstruct_potential_f, reconstruct_source_f
from ..spectral import eigen_residuals
from .config import ConfigError, parse_config
from .io import fmt, read_trace, write_csv, write_report, write_trace
from .runner import default_out_root, run

EXIT_CONFIG = 2
EXIT_FLOOR = 3


def _parse_grid(text: str) -> np.ndarray:
    try:
        a, b, n = text.split(":")
        return np.linspace(float(a), float(b), int(n))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid must be start:stop:n, got {text!r}") from exc


def _common(p: argparse.ArgumentParser, config_required=True):
    p.add_argument("--config", required=config_required, help="experiment INI file")
    p.add_argument("--out", help="output directory (default: $FRACINV_OUTPUT_ROOT/<name>)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fracinv", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("ml", help="evaluate E_{alpha,beta}(z) and print z,value CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, default=1.0)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--z", type=float, nargs="+")
    g.add_argument("--grid", type=_parse_grid, help="start:stop:n")
    _common(p, config_required=False)

    p = sub.add_parser("spectrum", help="eigenpairs of the spatial operator")
    _common(p)

    p = sub.add_parser("forward", help="forward solve; writes field.csv, trace.csv, report.txt")
    _common(p)

    for name in ("invert-source", "invert-potential"):
        p = sub.add_parser(name, help="reconstruct f from an observed trace")
        _common(p)
        p.add_argument("--data", required=True, help="CSV with columns t,u_x0")

    p = sub.add_parser("sweep", help="run every sweep point of a config; writes sweep.csv")
    _common(p)
    return ap


def _out_dir(args, cfg) -> Path:
    out = Path(args.out) if args.out else default_out_root() / cfg.name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_ml(args) -> int:
    z = args.grid if args.grid is not None else np.asarray(args.z, dtype=float)
    vals = mlf.mittag_leffler(args.alpha, args.beta, z)
    lines = ["z,value"] + [f"{fmt(float(a))},{fmt(float(b))}" for a, b in zip(np.atleast_1d(z), np.atleast_1d(vals))]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text, encoding="utf-8")
    if not args.quiet or not args.out:
        sys.stdout.write(text)
    return 0


def _load(args):
    cfg = parse_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _cmd_spectrum(args) -> int:
    from .tasks import setting

    cfg = _load(args)
    st = setting(cfg)
    b = st.basis
    res = eigen_residuals(b)
    out = _out_dir(args, cfg)
    write_csv(out / "spectrum.csv", ["n", "lambda", "elliptic_lambda", "residual"],
              zip(range(1, b.n_modes + 1), b.lambdas, b.elliptic_lambdas, res))
    if not args.quiet:
        print(f"wrote {b.n_modes} eigenpairs to {out / 'spectrum.csv'}")
    return 0


def _cmd_forward(args) -> int:
    from .tasks import task_forward

    cfg = _load(args)
    out = _out_dir(args, cfg)
    row = task_forward(cfg, out)[0]
    if not args.quiet:
        print(f"wrote field.csv, trace.csv, report.txt to {out} (max |u| = {row['max_abs']:.6g})")
    return 0


def _cmd_invert(args, kind: str) -> int:
    from .tasks import problem, recon_config, setting

    cfg = replace(_load(args), kind=kind)
    data = read_trace(args.data, cfg.alpha)
    if abs(data.grid.T - cfg.T) > 1e-9 * cfg.T:
        cfg = replace(cfg, T=data.grid.T)
    st = setting(cfg)
    prob = problem(cfg, st, None)
    rc = recon_config(cfg)
    out = _out_dir(args, cfg)
    try:
        if kind == "source":
            res = reconstruct_source_f(data, prob, st.basis, rc)
        else:
            res = reconstruct_potential_f(data, prob, st.basis, rc)
    except FloorViolation as exc:
        write_report(out / "report.txt", {"status": "floor_violation", "index": exc.index, "time": exc.time,
                                          "value": exc.value, "delta": cfg.delta})
        print(f"floor violation at t = {exc.time:.17g} (node {exc.index}): {exc}", file=sys.stderr)
        return EXIT_FLOOR
    write_trace(out / "f_hat.csv", res.f_hat, "f")
    write_trace(out / "residual.csv", res.residual_trace, "residual")
    write_report(out / "report.txt", {"status": "ok", "n_steps": data.grid.n_steps, "floor_margin": res.floor_margin,
                                      "max_residual": float(np.max(np.abs(res.residual_trace.values))),
                                      "spectral_tail": res.diagnostics.get("spectral_tail", 0.0)})
    if not args.quiet:
        print(f"wrote f_hat.csv, residual.csv, report.txt to {out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    out = Path(args.out) if args.out else None
    log = None if args.quiet else (lambda m: print(m, flush=True))
    path = run(cfg, out, log=log)
    if not args.quiet:
        print(f"wrote {path}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.cmd == "ml":
            return _cmd_ml(args)
        if args.cmd == "spectrum":
            return _cmd_spectrum(args)
        if args.cmd == "forward":
            return _cmd_forward(args)
        if args.cmd == "invert-source":
            return _cmd_invert(args, "source")
        if args.cmd == "invert-potential":
            return _cmd_invert(args, "potential")
        return _cmd_sweep(args)
    except ConfigError as exc:
        for p in exc.problems:
            print(f"config error: {p}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
