"""Command-line front end.

    wavekit run --problem acoustics_homog --mx 200 --tfinal 1 --out out/
    wavekit converge --problem acoustics_interface --solver fwave \\
        --recon characteristicwise --pulse-width 4 --resolutions 200,400,800,1600
    wavekit reversibility --cells-per-layer 24 --T 100 --t0 10

Options may also come from ``--config FILE`` holding ``key = value`` lines;
flags given on the command line win.  Exit status is 0 on success, 2 for
configuration errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .core import ConfigError, NumericalError
from .harness import (CHARACTERISTICS, FINE_GRID, ConvergenceRow, build_reference, convergence_study,
                      time_reversibility_test)
from .problems import PROBLEMS, Setup, setup_problem
from .recon import MODES
from .solver import RunStats, evolve

HEADER = "# wavekit v1"
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# option name -> type, shared by flags and config files
OPTIONS = {
    "problem": str, "mx": int, "my": int, "recon": str, "solver": str, "cfl": float,
    "tfinal": float, "frames": int, "out": str, "pulse_width": float, "resolutions": str,
    "norm": str, "ref_factor": int, "cells_per_layer": int, "T": float, "t0": float,
    "mode": str,
}

ACOUSTIC = ("acoustics_homog", "acoustics_interface")
HUMP = ("sw_hump_perturb", "sw_hump_zero", "sw_hump_smooth")


def read_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in OPTIONS:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        try:
            out[key] = OPTIONS[key](value)
        except ValueError:
            raise ConfigError(f"{path}:{n}: bad value for {key}: {value!r}") from None
    return out


def resolve(args) -> dict:
    cfg = read_config(args.config) if args.config else {}
    for key in OPTIONS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    return cfg


def make_setup(cfg: dict, mx: int | None = None) -> Setup:
    """Build the problem setup from a resolved option dict."""
    problem = cfg.get("problem")
    if problem is None:
        raise ConfigError("--problem is required")
    if problem not in PROBLEMS:
        raise ConfigError(f"unknown problem {problem!r}; choose from {', '.join(PROBLEMS)}")
    recon = cfg.get("recon")
    if recon is not None and recon not in MODES:
        raise ConfigError(f"unknown recon {recon!r}")
    kw = {}
    if recon is not None:
        kw["recon"] = recon
    if "cfl" in cfg:
        kw["cfl"] = cfg["cfl"]
    if "tfinal" in cfg:
        kw["t_final"] = cfg["tfinal"]
    n = mx if mx is not None else cfg.get("mx")
    solver = cfg.get("solver")
    if problem in ACOUSTIC:
        kw["a"] = cfg.get("pulse_width", 1.0)
        kw["solver"] = solver or "qwave"
        if n is not None:
            kw["mx"] = n
    else:
        if "pulse_width" in cfg:
            raise ConfigError("--pulse-width only applies to the acoustics problems")
        if problem == "stegoton":
            if n is not None:
                kw["cells_per_layer"] = n
        elif problem == "sw_radial_1d":
            if n is not None:
                kw["mr"] = n
        elif problem == "sonic_crystal":
            if n is not None:
                kw["mx"] = n
            if "my" in cfg:
                kw["my"] = cfg["my"]
            if "mode" in cfg:
                kw["mode"] = cfg["mode"]
        elif problem == "sw_dambreak_2d":
            if n is not None:
                kw["mx"] = n
                kw["my"] = n if mx is not None else cfg.get("my", n)
        elif problem in HUMP:
            if n is not None:
                kw["mx"] = n
                kw["my"] = n // 2 if mx is not None else cfg.get("my", n // 2)
    setup = setup_problem(problem, **kw)
    if solver is not None and problem not in ACOUSTIC:
        s = setup.config.solver
        ok = solver in (s.kind, "fwave" if s.is_fwave else "qwave")
        if not ok:
            raise ConfigError(f"{problem} uses the {s.kind} solver; --solver {solver} does not apply")
    return setup


def _fmt(v) -> str:
    # shortest round-trip decimal, independent of locale
    return repr(float(v))


def write_frame(path: Path, setup: Setup, frame):
    g = setup.grid.num_ghost
    q = frame.interior(g)
    aux = frame.aux[(slice(None),) + (slice(g, -g),) * setup.grid.ndim]
    m, na = q.shape[0], aux.shape[0]
    names = [f"q{k + 1}" for k in range(m)] + [f"aux{k + 1}" for k in range(na)]
    lines = [HEADER]
    if setup.grid.ndim == 1:
        lines.append(",".join(["x"] + names))
        cols = np.vstack([setup.grid.centers[None], q, aux]).T.tolist()
    else:
        lines.append(",".join(["x", "y"] + names))
        X, Y = setup.grid.mesh()
        # row-major by y then x
        stack = np.concatenate([X[None], Y[None], q, aux])
        cols = np.transpose(stack, (2, 1, 0)).reshape(-1, stack.shape[0]).tolist()
    lines.extend(",".join(map(_fmt, row)) for row in cols)
    path.write_text("\n".join(lines) + "\n")


def read_frame(path) -> tuple[list[str], np.ndarray]:
    """Column names and data of a frame file."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != HEADER:
        raise ConfigError(f"{path} is not a wavekit frame")
    names = lines[1].split(",")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    return names, data.reshape(-1, len(names))


def write_meta(path: Path, items: dict):
    lines = [HEADER] + [f"{k} = {items[k]}" for k in sorted(items)]
    path.write_text("\n".join(lines) + "\n")


def cmd_run(cfg: dict) -> int:
    setup = make_setup(cfg)
    nframes = cfg.get("frames", 1)
    if nframes < 1:
        raise ConfigError("--frames must be at least 1")
    out = Path(cfg.get("out", "wavekit_out"))
    t_final = setup.t_final
    t_start = setup.state.t
    times = [t_start + (t_final - t_start) * k / nframes for k in range(1, nframes)]
    stats = RunStats()
    frames = evolve(setup.state, setup.grid, setup.bc, setup.config, t_final, frame_times=times, stats=stats)
    out.mkdir(parents=True, exist_ok=True)
    meta = {f"config.{k}": v for k, v in cfg.items() if k != "out"}
    meta.update({"problem": setup.problem, "grid.shape": "x".join(map(str, setup.grid.shape)),
                 "recon": setup.config.recon.tag, "solver": setup.config.solver.kind,
                 "cfl": setup.config.cfl_target, "t_final": _fmt(t_final),
                 "steps": stats.steps, "rejected_steps": stats.rejected, "version": __version__})
    for k, v in setup.params.items():
        meta[f"param.{k}"] = v
    for i, fr in enumerate(frames):
        write_frame(out / f"frame{i:04d}.csv", setup, fr)
        meta[f"frame{i:04d}.t"] = _fmt(fr.t)
    write_meta(out / "run.meta", meta)
    print(f"wrote {len(frames)} frames to {out}")
    return 0


def _parse_resolutions(text) -> list[int]:
    try:
        res = [int(s) for s in str(text).replace(" ", "").split(",") if s]
    except ValueError:
        raise ConfigError(f"bad resolution list {text!r}") from None
    if not res:
        raise ConfigError("empty resolution list")
    return res


def format_table(rows: list[ConvergenceRow]) -> str:
    out = [f"{'resolution':>10}  {'error':>12}  {'order':>6}"]
    for r in rows:
        order = "" if r.order is None else f"{r.order:6.2f}"
        out.append(f"{r.resolution:>10}  {r.error:12.3e}  {order:>6}")
    return "\n".join(out)


def cmd_converge(cfg: dict) -> int:
    res = _parse_resolutions(cfg.get("resolutions", cfg.get("mx", "")))
    norm = cfg.get("norm", "l1")
    probe = make_setup(cfg, res[0])
    components = (0,) if probe.problem in ACOUSTIC else None
    if probe.exact is not None:
        reference = None
        provenance = CHARACTERISTICS
    else:
        factor = cfg.get("ref_factor", 8)
        finest = max(res)
        reference = build_reference(probe, FINE_GRID, factor=factor,
                                    make_setup=lambda f: make_setup(cfg, finest * f))
        provenance = FINE_GRID
    rows = convergence_study(lambda n: make_setup(cfg, n), res, reference, norm, components,
                             min_resolutions=1)
    out = Path(cfg.get("out", "wavekit_out"))
    out.mkdir(parents=True, exist_ok=True)
    lines = [HEADER, "resolution,error,order"]
    for r in rows:
        lines.append(f"{r.resolution},{_fmt(r.error)},{'' if r.order is None else _fmt(r.order)}")
    (out / "convergence.csv").write_text("\n".join(lines) + "\n")
    print(f"# {probe.problem}, {norm} error vs {provenance} reference")
    print(format_table(rows))
    return 0


def cmd_reversibility(cfg: dict) -> int:
    cpl = cfg.get("cells_per_layer", 24)
    T = cfg.get("T", 100.0)
    t0 = cfg.get("t0", 10.0)
    kw = {}
    if "recon" in cfg:
        kw["recon"] = cfg["recon"]
    if "cfl" in cfg:
        kw["cfl"] = cfg["cfl"]
    r = time_reversibility_test(cpl, T, t0, **kw)
    out = Path(cfg.get("out", "wavekit_out"))
    out.mkdir(parents=True, exist_ok=True)
    lines = [HEADER, "cells_per_layer,T,t0,max_diff,valid",
             f"{cpl},{_fmt(T)},{_fmt(t0)},{_fmt(r.max_diff)},{int(r.valid)}"]
    (out / "reversibility.csv").write_text("\n".join(lines) + "\n")
    print(f"cells/layer {cpl}, T {T:g}, t0 {t0:g}: max difference {r.max_diff:.3e}"
          + ("" if r.valid else " (invalid: shock formed)"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavekit", description="High-order wave-propagation solver")
    p.add_argument("--version", action="version", version=f"wavekit {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="key = value option file")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--recon", help="|".join(MODES))
        sp.add_argument("--cfl", type=float)
        return sp

    run = common(sub.add_parser("run", help="run one problem and write frames"))
    conv = common(sub.add_parser("converge", help="convergence study"))
    for sp in (run, conv):
        sp.add_argument("--problem", help="|".join(PROBLEMS))
        sp.add_argument("--mx", type=int)
        sp.add_argument("--my", type=int)
        sp.add_argument("--solver")
        sp.add_argument("--tfinal", type=float)
        sp.add_argument("--pulse-width", dest="pulse_width", type=float)
        sp.add_argument("--mode", help="sonic crystal incident wave: long|bandgap")
    run.add_argument("--frames", type=int, help="number of output intervals")
    conv.add_argument("--resolutions", help="comma-separated mx values")
    conv.add_argument("--norm", choices=("l1", "l2"))
    conv.add_argument("--ref-factor", dest="ref_factor", type=int)
    rev = common(sub.add_parser("reversibility", help="stegoton time-reversal test"))
    rev.add_argument("--cells-per-layer", dest="cells_per_layer", type=int)
    rev.add_argument("--T", dest="T", type=float)
    rev.add_argument("--t0", type=float)
    rev.add_argument("--long", action="store_true", help="long run, T = 600 and t0 = 60")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "reversibility" and args.long:
        args.T = 600.0 if args.T is None else args.T
        args.t0 = 60.0 if args.t0 is None else args.t0
    try:
        cfg = resolve(args)
        handler = {"run": cmd_run, "converge": cmd_converge, "reversibility": cmd_reversibility}[args.command]
        return handler(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        where = []
        if exc.stage is not None:
            where.append(f"stage {exc.stage}")
        if exc.index is not None:
            where.append(f"cell/interface {tuple(int(i) for i in np.atleast_1d(exc.index))}")
        print(f"numerical failure: {exc}" + (f" [{', '.join(where)}]" if where else ""), file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
