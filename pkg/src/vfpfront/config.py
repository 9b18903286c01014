"""Flat key = value experiment configuration.

Precedence: command-line flags over the config file over the defaults below.
Every key has a default; unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .model import KernelKind, ModelParams
from .spectral import HermiteBasis

EXPERIMENTS = ("thermo", "front", "spectrum", "evolve", "hydro", "pipeline")
PERTURBATIONS = ("gaussian_density", "mode1_current")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    t = text.strip().lower()
    return None if t in ("", "none", "auto") else float(text)


# key -> (parser, default, help)
KEYS: dict[str, tuple] = {
    "beta": (float, 1.25, "inverse temperature"),
    "n": (float, 2.0, "total density"),
    "kernel": (str, "biweight", "kernel shape: biweight or bump"),
    "kernel_radius": (float, 1.0, "kernel support radius R"),
    "domain": (float, 12.0, "half-width Z of the computational domain [-Z, Z]"),
    "nz": (int, 1025, "number of grid nodes (odd)"),
    "hermite_order": (int, 16, "highest Hermite mode K"),
    "dt": (float, 0.002, "kinetic time step"),
    "tmax": (float, 20.0, "kinetic end time"),
    "gamma": (float, 0.1, "exponent of the spatial weight (1 + z^2)^gamma"),
    "seed": (int, 0, "seed for every stochastic probe"),
    "record_every": (int, 250, "kinetic steps between diagnostics records"),
    "perturbation": (str, "gaussian_density", "initial perturbation: gaussian_density or mode1_current"),
    "amplitude": (float, 1e-3, "perturbation amplitude"),
    "width": (float, 1.0, "perturbation width"),
    "energy_constant": (_opt_float, None, "K in the combined energy (auto: 10 (1 + 2 beta) / beta)"),
    "enforce_symmetry": (_bool, False, "re-project onto the symmetric subspace after each step"),
    "front_tol": (float, 1e-12, "front fixed-point tolerance"),
    "spectrum_k": (int, 6, "number of eigenvalues reported"),
    "spectrum_method": (str, "dense", "dense or shift-invert"),
    "lgap_samples": (int, 1000, "random samples for the Fokker-Planck gap probe"),
    "aprime_samples": (int, 50, "random samples for the A' lower-bound probe"),
    "hydro_tmax": (float, 1.0, "hydrodynamic end time"),
    "hydro_amplitude": (float, 0.05, "density perturbation of the front for the hydro run"),
    "hydro_record_every": (int, 100, "hydro steps between records"),
    "out": (str, "out", "output directory"),
}


@dataclass(frozen=True)
class ExperimentConfig:
    params: ModelParams = field(default_factory=ModelParams)
    experiment: str = "pipeline"
    values: dict = field(default_factory=dict)

    def __getattr__(self, name):
        # flat access to the non-model keys: cfg.tmax, cfg.seed, ...
        values = self.__dict__.get("values", {})
        if name in values:
            return values[name]
        raise AttributeError(name)

    @property
    def out_dir(self) -> Path:
        return Path(self.values["out"])

    def to_dict(self) -> dict:
        return {"experiment": self.experiment, **self.values}


def defaults() -> dict:
    return {k: v[1] for k, v in KEYS.items()}


def _convert(key: str, raw):
    if key not in KEYS:
        raise ValidationError(f"unknown config key {key!r}")
    parser = KEYS[key][0]
    if not isinstance(raw, str):
        if raw is None and KEYS[key][1] is None:
            return None
        if parser in (float, _opt_float) and isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
        if parser is int and isinstance(raw, int) and not isinstance(raw, bool):
            return raw
        if parser is _bool and isinstance(raw, bool):
            return raw
        raw = str(raw)
    try:
        return parser(raw.strip())
    except ValueError as exc:
        raise ValidationError(f"config key {key!r}: cannot read {raw!r} ({exc})") from None


def read_config_file(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in out:
            raise ValidationError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = _convert(key, raw)
    return out


def parse_config(path=None, overrides: dict | None = None, experiment: str = "pipeline",
                 validate: bool = True) -> ExperimentConfig:
    """Merge defaults, the optional file and the overrides (flags), then validate."""
    if experiment not in EXPERIMENTS:
        raise ValidationError(f"unknown experiment {experiment!r}; choose from {EXPERIMENTS}")
    values = defaults()
    if path is not None:
        values.update(read_config_file(path))
    for key, raw in (overrides or {}).items():
        if raw is None:
            continue
        values[key.replace("-", "_")] = _convert(key.replace("-", "_"), raw)
    params = ModelParams(
        beta=values["beta"], n=values["n"], kernel_kind=_kernel_kind(values["kernel"]),
        kernel_radius=values["kernel_radius"], half_width=values["domain"], nz=values["nz"],
        hermite_order=values["hermite_order"], dt=values["dt"],
    )
    cfg = ExperimentConfig(params=params, experiment=experiment, values=values)
    if validate:
        validate_config(cfg)
    return cfg


def _kernel_kind(text: str) -> KernelKind:
    try:
        return KernelKind(text)
    except ValueError:
        raise ValidationError(f"config key 'kernel': unknown kernel {text!r} "
                              f"(choose from {[k.value for k in KernelKind]})") from None


def validate_config(cfg: ExperimentConfig) -> None:
    """Check every precondition that can be checked before running anything."""
    p = cfg.params
    p.validate()
    v = cfg.values
    if p.kernel_radius < 2 * p.dz:
        raise ValidationError(f"kernel_radius {p.kernel_radius} is under-resolved: needs >= 2 dz = {2 * p.dz:.4g}")
    for key in ("tmax", "hydro_tmax", "width"):
        if not v[key] > 0:
            raise ValidationError(f"config key {key!r} must be > 0, got {v[key]}")
    for key in ("record_every", "hydro_record_every", "spectrum_k", "lgap_samples", "aprime_samples"):
        if v[key] < 1:
            raise ValidationError(f"config key {key!r} must be >= 1, got {v[key]}")
    if v["amplitude"] < 0 or v["hydro_amplitude"] < 0:
        raise ValidationError("perturbation amplitudes must be >= 0")
    if v["gamma"] < 0:
        raise ValidationError(f"config key 'gamma' must be >= 0, got {v['gamma']}")
    if v["perturbation"] not in PERTURBATIONS:
        raise ValidationError(f"config key 'perturbation' must be one of {PERTURBATIONS}, got {v['perturbation']!r}")
    if v["spectrum_method"] not in ("dense", "shift-invert"):
        raise ValidationError(f"config key 'spectrum_method' must be dense or shift-invert")
    if v["seed"] < 0:
        raise ValidationError(f"config key 'seed' must be >= 0, got {v['seed']}")
    if cfg.experiment in ("evolve", "pipeline"):
        vmax = HermiteBasis(p.hermite_order, p.beta).max_speed()
        bound = p.dz / vmax
        if p.dt > bound:
            raise ValidationError(f"dt = {p.dt} violates the CFL bound dz / v_max = {bound:.6g}")

