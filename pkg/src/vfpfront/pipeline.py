"""Stage runner: thermo -> front -> spectrum -> kinetic / hydro, with a run manifest."""

from __future__ import annotations

import datetime as _dt
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .errors import ValidationError, VfpError
from .front import check_front, excess_free_energy, sharp_step, solve_front
from .hydro import HYDRO_COLUMNS, HydroState, perturbed_front, run_hydro
from .io import save_checkpoint, save_front, sha256_file, write_csv, write_json
from .kinetic import CSV_COLUMNS, energy_monitor, evolve, init_perturbation
from .spectral import (HermiteBasis, OperatorA, analyze_front_spectrum, check_lgap,
                       probe_Aprime_bound, symbol_spectrum_A0)
from .thermo import chemical_potential_constant, coexistence_densities

log = logging.getLogger(__name__)

STAGES = {
    "thermo": ("thermo",),
    "front": ("thermo", "front"),
    "spectrum": ("thermo", "front", "spectrum"),
    "evolve": ("thermo", "front", "evolve"),
    "hydro": ("thermo", "front", "hydro"),
    "pipeline": ("thermo", "front", "spectrum", "evolve"),
}

MANIFEST_NAME = "manifest.json"


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    config: dict
    out_dir: Path
    version: str = __version__
    started: str = field(default_factory=_now)
    finished: str | None = None
    status: str = "running"
    stages: list = field(default_factory=list)
    files: list = field(default_factory=list)
    notice: str | None = None
    failure: dict | None = None

    @property
    def path(self) -> Path:
        return self.out_dir / MANIFEST_NAME

    def add_file(self, path: Path):
        path = Path(path)
        self.files.append({"path": path.name, "sha256": sha256_file(path), "bytes": path.stat().st_size})

    def to_dict(self) -> dict:
        return {
            "version": self.version, "started": self.started, "finished": self.finished,
            "status": self.status, "config": self.config, "stages": self.stages,
            "files": self.files, "notice": self.notice, "failure": self.failure,
        }

    def write(self) -> Path:
        return write_json(self.path, self.to_dict())


class _Context:
    def __init__(self, cfg: ExperimentConfig, manifest: RunManifest):
        self.cfg = cfg
        self.manifest = manifest
        self.out = manifest.out_dir
        self.coex = None
        self.front = None

    def emit_json(self, name: str, obj) -> Path:
        path = write_json(self.out / name, obj)
        self.manifest.add_file(path)
        return path


def _stage_thermo(ctx: _Context) -> bool:
    p = ctx.cfg.params
    coex = coexistence_densities(p.beta, p.n)
    ctx.coex = coex
    doc = {"beta": p.beta, "n": p.n, "supercritical": p.supercritical,
           "rho_plus": coex.rho_plus, "rho_minus": coex.rho_minus, "m": coex.m}
    if p.supercritical:
        doc["el_constant"] = chemical_potential_constant(coex.rho_plus, coex.rho_minus, p.beta)
    ctx.emit_json("thermo.json", doc)
    if not p.supercritical:
        ctx.manifest.notice = (f"beta*n = {p.beta * p.n:g} <= 2: single homogeneous phase, "
                               "no front exists; later stages skipped")
        return False
    return True


def _stage_front(ctx: _Context) -> bool:
    p = ctx.cfg.params
    front = solve_front(p, tol=ctx.cfg.front_tol)
    ctx.front = front
    path = save_front(front, ctx.out / "front.json")
    ctx.manifest.add_file(path)
    checks = check_front(front)
    rep = front.report
    ctx.emit_json("front_report.json", {
        "iterations": rep.iterations, "el_residual": rep.el_residual,
        "elp_residual": rep.elp_residual, "excess_energy": rep.excess_energy,
        "sharp_step_excess_energy": excess_free_energy(sharp_step(p, front.grid)),
        "tail_rate": rep.tail_rate, "symmetry_error": checks.symmetry_error,
        "monotone": checks.monotone, "strict_bounds": checks.strict_bounds,
        "tail_error": checks.tail_error,
    })
    return True


def _stage_spectrum(ctx: _Context) -> bool:
    cfg, front = ctx.cfg, ctx.front
    p = cfg.params
    report = analyze_front_spectrum(front, k=cfg.spectrum_k, method=cfg.spectrum_method)
    sym = symbol_spectrum_A0(p.beta, front.rho_plus, front.rho_minus, front.kernel)
    basis = HermiteBasis(p.hermite_order, p.beta)
    # one generator drives every stochastic probe, in a fixed order
    rng = np.random.default_rng(cfg.seed)
    nu0 = check_lgap(basis, cfg.lgap_samples, rng)
    probe = probe_Aprime_bound(OperatorA(front), cfg.aprime_samples, rng)
    ctx.emit_json("spectrum.json", {
        "A_tilde": report.to_dict(), "A0_symbol": sym.to_dict(),
        "lgap_min_ratio": nu0, "lgap_mode1_ratio": p.beta / (1 + 2 * p.beta),
        "aprime_min_ratio": probe.minimum, "aprime_skipped": probe.skipped,
    })
    return True


def _stage_evolve(ctx: _Context) -> bool:
    cfg, front = ctx.cfg, ctx.front
    state = init_perturbation(cfg.perturbation, cfg.amplitude, front, width=cfg.width)
    traj = evolve(state, cfg.tmax, record_every=cfg.record_every, energy_constant=cfg.energy_constant,
                  gamma=cfg.gamma, enforce_symmetry=cfg.enforce_symmetry)
    ctx.manifest.add_file(write_csv(ctx.out / "kinetic.csv", CSV_COLUMNS, traj.records))
    ctx.manifest.add_file(save_checkpoint(traj.final, ctx.out / "checkpoint.json"))
    rep = energy_monitor(traj, gamma=cfg.gamma)
    g = traj.column("free_energy")
    ctx.emit_json("kinetic_report.json", {
        "energy_violations": rep.violations, "energy_max_jump": rep.max_jump,
        "decay_exponent": rep.decay_exponent, "decay_prefactor": rep.prefactor,
        "free_energy_max_increase": float(max(0.0, (g[1:] - g[:-1]).max())) if g.size > 1 else 0.0,
        "norm_M_initial": traj.records[0].norm_M, "norm_M_final": traj.records[-1].norm_M,
    })
    return True


def _stage_hydro(ctx: _Context) -> bool:
    cfg, front = ctx.cfg, ctx.front
    state = perturbed_front(front, cfg.hydro_amplitude) if cfg.hydro_amplitude > 0 else HydroState.from_front(front)
    run = run_hydro(state, cfg.hydro_tmax, record_every=cfg.hydro_record_every, front=front)
    ctx.manifest.add_file(write_csv(ctx.out / "hydro.csv", HYDRO_COLUMNS, run.records))
    return True


_RUNNERS = {"thermo": _stage_thermo, "front": _stage_front, "spectrum": _stage_spectrum,
            "evolve": _stage_evolve, "hydro": _stage_hydro}


def run_pipeline(cfg: ExperimentConfig, stages: tuple[str, ...] | None = None) -> RunManifest:
    """Run the stages of ``cfg.experiment`` (or ``stages``) and write the manifest.

    The manifest is written once before the first stage and rewritten after
    the last.  A failing stage is recorded with its name and error class and
    the remaining stages are skipped.
    """
    stages = stages or STAGES[cfg.experiment]
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg.to_dict(), out_dir=out)
    manifest.write()
    ctx = _Context(cfg, manifest)
    status = "ok"
    for name in stages:
        t0 = time.perf_counter()
        try:
            go_on = _RUNNERS[name](ctx)
        except VfpError as exc:
            kind = "validation" if isinstance(exc, ValidationError) else "numerical"
            manifest.stages.append({"name": name, "status": "failed",
                                    "seconds": round(time.perf_counter() - t0, 3)})
            manifest.failure = {"stage": name, "kind": kind, "error": type(exc).__name__,
                                "message": str(exc)}
            status = "failed"
            log.error("stage %s failed: %s", name, exc)
            break
        manifest.stages.append({"name": name, "status": "ok",
                                "seconds": round(time.perf_counter() - t0, 3)})
        log.info("stage %s done", name)
        if not go_on:
            status = "stopped"
            break
    manifest.status = status
    manifest.finished = _now()
    manifest.write()
    return manifest
