"""Macroscopic limit: the two-species gradient flow
d_t rho_i = d_z( beta^-1 rho_i d_z mu_i ),  mu_i = ln rho_i + beta U*rho_j,
on [-Z, Z] with zero-flux walls."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ValidationError
from .front import FrontProfile, cross_energy, grand_potential_density
from .model import Extension, ModelParams, ScalarField, convolve_array
from .thermo import chemical_potential_constant, coexistence_densities

HYDRO_COLUMNS = ("t", "free_energy", "mass_1", "mass_2", "flux_sup_norm", "dist_to_front_sup")


@dataclass(frozen=True)
class HydroState:
    rho1: ScalarField
    rho2: ScalarField
    time: float
    params: ModelParams = field(repr=False)

    @classmethod
    def from_arrays(cls, rho1, rho2, params: ModelParams, time: float = 0.0) -> "HydroState":
        rho1 = np.asarray(rho1, dtype=float)
        rho2 = np.asarray(rho2, dtype=float)
        return cls(_boundary_field(rho1), _boundary_field(rho2), time, params)

    @classmethod
    def from_front(cls, front: FrontProfile) -> "HydroState":
        return cls(front.field1(), front.field2(), 0.0, front.params)

    @property
    def rho(self) -> np.ndarray:
        return np.stack([self.rho1.values, self.rho2.values])


def _boundary_field(values: np.ndarray) -> ScalarField:
    return ScalarField.constant_ext(values, values[0], values[-1])


def _check_positive(rho: np.ndarray):
    if np.any(rho <= 0):
        i, k = np.argwhere(rho <= 0)[0]
        raise ValidationError(f"density of species {i + 1} not positive at node {k}: {rho[i, k]}")


def _mu(rho: np.ndarray, kernel, beta: float) -> np.ndarray:
    # extend every density by its own end values
    ext = [Extension("constant", r[0], r[-1]) for r in rho]
    u1 = convolve_array(kernel, rho[0], ext[0])
    u2 = convolve_array(kernel, rho[1], ext[1])
    return np.log(rho) + beta * np.stack([u2, u1])


def chemical_potential(state: HydroState, kernel=None) -> tuple[ScalarField, ScalarField]:
    """mu_i = ln rho_i + beta U*rho_j, densities extended by their boundary values."""
    rho = state.rho
    _check_positive(rho)
    kernel = kernel or state.params.kernel()
    mu = _mu(rho, kernel, state.params.beta)
    return (ScalarField.constant_ext(mu[0], mu[0, 0], mu[0, -1]),
            ScalarField.constant_ext(mu[1], mu[1, 0], mu[1, -1]))


def face_flux(rho: np.ndarray, mu: np.ndarray, dz: float, beta: float) -> np.ndarray:
    """beta^-1 rho d_z mu on the nz-1 interior faces (arithmetic-mean mobility)."""
    mob = 0.5 * (rho[:, 1:] + rho[:, :-1]) / beta
    return mob * np.diff(mu, axis=-1) / dz


def stability_bound(params: ModelParams, rho: np.ndarray, safety: float = 0.9) -> float:
    return safety * params.dz**2 * params.beta / (2.0 * float(np.max(rho)))


def hydro_step(state: HydroState, dt: float, kernel=None, safety: float = 0.9) -> HydroState:
    """Forward-Euler step in divergence form with zero flux through both walls."""
    params = state.params
    rho = state.rho
    _check_positive(rho)
    bound = stability_bound(params, rho, safety)
    if not 0 < dt <= bound:
        raise ValidationError(f"dt = {dt} outside the explicit stability bound (0, {bound:.6g}]")
    kernel = kernel or params.kernel()
    flux = face_flux(rho, _mu(rho, kernel, params.beta), params.dz, params.beta)
    div = np.zeros_like(rho)
    div[:, :-1] += flux
    div[:, 1:] -= flux
    new = rho + (dt / params.dz) * div
    if np.any(new <= 0):
        i, k = np.argwhere(new <= 0)[0]
        raise NumericalError(f"hydro step lost positivity: species {i + 1}, node {k}, "
                             f"value {new[i, k]:.3e} at t = {state.time + dt:.6g}")
    return HydroState.from_arrays(new[0], new[1], params, state.time + dt)


def flux_sup_norm(state: HydroState, kernel=None) -> float:
    params = state.params
    kernel = kernel or params.kernel()
    rho = state.rho
    return float(np.max(np.abs(face_flux(rho, _mu(rho, kernel, params.beta), params.dz, params.beta))))


def hydro_free_energy(state: HydroState, kernel=None) -> float:
    """Free energy relative to the coexisting phases.

    The local part is f - mu (rho1 + rho2) with mu the common chemical
    potential of the two phases, so both homogeneous minimizers carry zero
    density; the interaction is beta rho1 (U*rho2) - beta rho1 rho2 summed on
    the grid, rho2 extended by its boundary values.
    """
    params = state.params
    rho = state.rho
    _check_positive(rho)
    kernel = kernel or params.kernel()
    coex = coexistence_densities(params.beta, params.n)
    rp, rm, beta = coex.rho_plus, coex.rho_minus, params.beta
    mu = chemical_potential_constant(rp, rm, beta) + 1.0
    local = grand_potential_density(rho[0], rho[1], beta, mu) - grand_potential_density(rp, rm, beta, mu)
    u2 = convolve_array(kernel, rho[1], Extension("constant", rho[1, 0], rho[1, -1]))
    inter = beta * rho[0] * (u2 - rho[1])
    return float(np.sum(local + inter) * params.dz)


def hydro_free_energy_pairs(state: HydroState, kernel=None) -> float:
    """Same functional with the interaction written as a double sum over domain pairs."""
    params = state.params
    rho = state.rho
    kernel = kernel or params.kernel()
    coex = coexistence_densities(params.beta, params.n)
    mu = chemical_potential_constant(coex.rho_plus, coex.rho_minus, params.beta) + 1.0
    local = (grand_potential_density(rho[0], rho[1], params.beta, mu)
             - grand_potential_density(coex.rho_plus, coex.rho_minus, params.beta, mu))
    return float(np.sum(local) * params.dz) + cross_energy(rho[0], rho[1], kernel, params.beta)


@dataclass(frozen=True)
class HydroRecord:
    t: float
    free_energy: float
    mass_1: float
    mass_2: float
    flux_sup_norm: float
    dist_to_front_sup: float


@dataclass
class HydroRun:
    records: list[HydroRecord]
    final: HydroState

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def _record(state: HydroState, kernel, front: FrontProfile | None) -> HydroRecord:
    rho = state.rho
    dz = state.params.dz
    dist = float(np.max(np.abs(rho - front.w))) if front is not None else math.nan
    return HydroRecord(t=state.time, free_energy=hydro_free_energy(state, kernel),
                       mass_1=float(np.sum(rho[0]) * dz), mass_2=float(np.sum(rho[1]) * dz),
                       flux_sup_norm=flux_sup_norm(state, kernel), dist_to_front_sup=dist)


def run_hydro(state: HydroState, t_end: float, dt: float | None = None, record_every: int = 100,
              front: FrontProfile | None = None, safety: float = 0.9) -> HydroRun:
    """Integrate to ``t_end``; dt defaults to the stability bound of the initial state."""
    if not t_end > 0:
        raise ValidationError(f"t_end must be > 0, got {t_end}")
    if record_every < 1:
        raise ValidationError(f"record_every must be >= 1, got {record_every}")
    kernel = state.params.kernel()
    # the bound uses max rho, which stays near its initial value for these runs
    dt_max = stability_bound(state.params, state.rho, safety * 0.95)
    dt = dt_max if dt is None else dt
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / nsteps
    t0 = state.time
    records = [_record(state, kernel, front)]
    for n in range(1, nsteps + 1):
        state = hydro_step(state, dt, kernel, safety)
        if n % record_every == 0 or n == nsteps:
            state = HydroState(state.rho1, state.rho2, t0 + n * dt, state.params)
            records.append(_record(state, kernel, front))
    return HydroRun(records, state)


def perturbed_front(front: FrontProfile, amplitude: float, width: float = 1.0) -> HydroState:
    """Front plus a symmetric, mass-neutral density bump (exchanged between species)."""
    z = front.z
    g1 = np.exp(-0.5 * (z / width) ** 2)
    g2 = np.exp(-0.125 * (z / width) ** 2)
    g = g1 - (np.sum(g1) / np.sum(g2)) * g2
    return HydroState.from_arrays(front.w1 + amplitude * g, front.w2 + amplitude * g[::-1], front.params)
