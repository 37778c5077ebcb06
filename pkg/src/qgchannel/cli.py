"""Command-line front end.

Usage::

    qgchannel SUBCOMMAND --config run.json [--out DIR] [--resolution M,N] [--seed S]

Subcommands write into the output directory (``output`` in the config,
overridden by ``--out``):

``lowdim``           lowdim.csv with the equilibria of the three-mode model
``dns``              timeseries.csv, final_state.json, summary.json
``continue``         branch.csv, summary.json and, on request, states/point_NNNNN.json
``stability``        stability.json
``export-contours``  contours.json from ``contours.source`` (a state file)

On failure a one-line JSON object ``{"error": ..., "message": ...}`` goes to
stderr and the exit status is nonzero (2 for bad input, 1 for solver failures).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import continuation as cont
from .dns import Cycle, DnsConfig, DNSSolver, Steady, basic_flow, detect_limit_cycle
from .fields import compute_Eave, compute_Uave, symmetry_project
from .io import ConfigError, RunConfig, contour_grid, load_state, parse_config, save_state, write_json
from .lowdim import LowDimParams, lowdim_diagnostics, lowdim_equilibria

SUBCOMMANDS = ("lowdim", "dns", "continue", "stability", "export-contours")


# --------------------------------------------------------------------------
# subcommands


def run_lowdim(cfg: RunConfig, out: Path) -> list[Path]:
    topo = cfg.topography
    if topo.ridge is None:
        raise ConfigError([("topography", "the three-mode model needs ridge topography")])
    p = LowDimParams(cfg.k, cfg.beta, topo.ridge.h0, cfg.psi_A0)
    path = out / "lowdim.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["psi_A", "psi_K", "psi_L", "U_ave", "F_ave"])
        for s in lowdim_equilibria(p):
            U, F, _ = lowdim_diagnostics(s, p)
            w.writerow(["%.4g" % v for v in (s.psi_A, s.psi_K, s.psi_L, U, F)])
    return [path]


def _initial_state(cfg: RunConfig, params):
    d = cfg.dns
    if d.initial == "basic":
        return basic_flow(params, d.N, d.M, symmetry=d.symmetry)
    state, _ = load_state(d.initial)
    if (state.M, state.N) != (d.M, d.N):
        state = state.resized(d.M, d.N)
    return symmetry_project(state, d.symmetry)


def run_dns(cfg: RunConfig, out: Path) -> list[Path]:
    params = cfg.channel_params()
    d = cfg.dns
    dc = DnsConfig(d.dt, d.T, d.M, d.N, d.sample_every, d.symmetry, d.dealias_y)
    state0 = _initial_state(cfg, params)
    written = []
    ckpt = out / "checkpoints"

    def checkpoint(t, s):
        step = int(round(t / d.dt))
        if d.checkpoint_every and step % d.checkpoint_every == 0:
            ckpt.mkdir(exist_ok=True)
            path = ckpt / f"state_{step:08d}.json"
            save_state(path, s, t=t, U_ave=compute_Uave(s), E_ave=compute_Eave(s))
            written.append(path)

    ts, final = DNSSolver(params, dc).run(state0, callback=checkpoint)
    ts.write_csv(out / "timeseries.csv")
    save_state(out / "final_state.json", final, t=float(ts.t[-1]), U_ave=compute_Uave(final), E_ave=compute_Eave(final))
    res = detect_limit_cycle(ts)
    summary = {"classification": type(res).__name__, "n_samples": len(ts)}
    if isinstance(res, Steady):
        summary["U_ave"] = res.value
    elif isinstance(res, Cycle):
        summary.update(period=res.period, U_min=res.u_min, U_max=res.u_max)
    else:
        summary["reason"] = res.reason
    write_json(out / "summary.json", summary)
    return [out / "timeseries.csv", out / "final_state.json", out / "summary.json", *written]


def run_continue(cfg: RunConfig, out: Path) -> list[Path]:
    params = cfg.channel_params()
    c = cfg.continuation
    cc = cont.ContinuationConfig(
        M=c.M, N=c.N, symmetry=c.symmetry, newton_tol=c.newton_tol, arc_tol=c.newton_tol,
        ds_init=c.ds_init, ds_min=c.ds_min, ds_max=c.ds_max, max_points=c.max_points,
        F_min=c.F_min, F_max=c.F_max, first_direction=c.first_direction, seed_F=c.seed_F,
    )
    branch = cont.trace_branch(params, cc)
    branch.write_csv(out / "branch.csv")
    written = [out / "branch.csv"]
    if c.write_states:
        sd = out / "states"
        sd.mkdir(exist_ok=True)
        for i, pt in enumerate(branch.points):
            path = sd / f"point_{i:05d}.json"
            save_state(path, pt.state(branch.layout), F_ave=pt.F, U_ave=pt.U_ave, E_ave=pt.E_ave)
            written.append(path)
    summary = {
        "termination_reason": branch.termination_reason,
        "n_points": len(branch),
        "folds_F": cont.folds(branch),
        "max_residual": max(p.residual for p in branch.points),
        "events": list(branch.events),
    }
    write_json(out / "summary.json", summary)
    return written + [out / "summary.json"]


def run_stability(cfg: RunConfig, out: Path) -> list[Path]:
    from . import stability as st

    s = cfg.stability
    cl = cfg.closure
    if cl.affine is not None:
        raise ConfigError([("closure", "stability runs need constant_fave or constant_uave")])
    params = st.zonal_params(cfg.k, cfg.beta, cfg.psi_A0, s.eta, F_ave=cl.constant_fave, U_ave=cl.constant_uave)
    rng = np.random.default_rng(cfg.seed)
    pert = st.smooth_perturbation(s.M, s.N, rng, s.amplitude)
    rep = st.theorem_decay_check(params, pert, s.T, s.dt, s.sample_every)
    data = rep.to_json()
    rec = rep.record
    if rec is not None and np.all(rec.L > 0):
        data["L_rate"] = st.fit_rate(rec.t, rec.L)
    data["eta"] = s.eta
    data["seed"] = cfg.seed
    path = out / "stability.json"
    write_json(path, data)
    return [path]


def run_export_contours(cfg: RunConfig, out: Path) -> list[Path]:
    c = cfg.contours
    if c.source is None:
        raise ConfigError([("contours.source", "a state file is required")])
    state, meta = load_state(c.source)
    params = cfg.channel_params()
    exp = contour_grid(
        state, params, c.Nx, c.Ny, c.levels,
        F_ave=meta.get("F_ave", float("nan")), t=meta.get("t", 0.0),
    )
    path = out / "contours.json"
    write_json(path, exp.to_json())
    return [path]


_RUNNERS = {
    "lowdim": run_lowdim,
    "dns": run_dns,
    "continue": run_continue,
    "stability": run_stability,
    "export-contours": run_export_contours,
}


def dispatch(subcommand: str, cfg: RunConfig, out: Path | None = None) -> list[Path]:
    """Run one subcommand and return the files it wrote."""
    if subcommand not in _RUNNERS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    out = Path(out if out is not None else cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[subcommand](cfg, out)


# --------------------------------------------------------------------------
# entry point


def _resolution(text: str) -> tuple[int, int]:
    try:
        M, N = (int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected M,N, got {text!r}") from None
    if M < 1 or N < 4:
        raise argparse.ArgumentTypeError("need M >= 1 and N >= 4")
    return M, N


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qgchannel", description="Barotropic channel flow over topography.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    ap.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    ap.add_argument("--resolution", type=_resolution, default=None, metavar="M,N",
                    help="resolution for dns, continue and stability")
    ap.add_argument("--seed", type=_seed, default=None, help="RNG seed (overrides the config)")
    return ap


def _fail(kind: str, message: str, code: int, **extra) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}, sort_keys=True) + "\n")
    return code


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        if args.resolution is not None:
            cfg = cfg.with_resolution(*args.resolution)
        if args.seed is not None:
            cfg = cfg.model_copy(update={"seed": args.seed})
        files = dispatch(args.subcommand, cfg, args.out)
    except ConfigError as err:
        return _fail("ConfigError", str(err), 2, keys=[k for k, _ in err.errors])
    except (FileNotFoundError, IsADirectoryError, PermissionError) as err:
        return _fail(type(err).__name__, str(err), 2)
    except Exception as err:  # solver failures are reported, not raised
        return _fail(type(err).__name__, str(err), 1)
    for f in files:
        print(f)
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
