"""Hermite-moment integration of the perturbation h = f - w M around the front.

State layout: ``coeffs[i, k, z]`` is the coefficient of the normalized
Hermite mode k of species i at node z, so that
h_i(z, v) = sum_k coeffs[i, k, z] phi_k(v) and a_i(z) = coeffs[i, 0, z].

Velocity is one-dimensional (the z component); the reflection v -> -v maps
mode k to (-1)^k times itself.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np
from numpy.polynomial import hermite_e

from .errors import BlowUpError, NumericalError, ValidationError
from .front import FrontProfile
from .model import convolve_array, convolve_derivative_array
from .spectral import HermiteBasis, OperatorA

log = logging.getLogger(__name__)

DEFAULT_GAMMA = 0.1


def default_energy_constant(beta: float) -> float:
    """10 / nu0 with nu0 = beta / (1 + 2 beta), the Fokker-Planck gap in the D-norm."""
    return 10.0 * (1.0 + 2.0 * beta) / beta


class KineticModel:
    """Frozen-front operator data shared by every state on one front."""

    def __init__(self, front: FrontProfile, order: int | None = None):
        self.front = front
        self.order = front.params.hermite_order if order is None else int(order)
        self.beta = front.beta
        self.basis = HermiteBasis(self.order, self.beta)
        self.kernel = front.kernel
        self.dz = front.grid.dz
        self.nz = front.grid.nz
        self.w = front.w  # (2, nz)
        k = np.arange(self.order + 1)
        self.sqrt_k = np.sqrt(k.astype(float))
        self.damping = self.beta * k[:, None]
        self.parity = ((-1.0) ** k)[:, None]
        # U * w_j' seen by species i
        self.front_force = convolve_array(self.kernel, front.wp)[::-1]
        self.max_speed = self.basis.max_speed()
        self._op = None

    @property
    def shape(self) -> tuple[int, int, int]:
        return (2, self.order + 1, self.nz)

    @property
    def operator_a(self) -> OperatorA:
        if self._op is None:
            self._op = OperatorA(self.front)
        return self._op

    # -- spatial derivative ----------------------------------------------

    def dz_coeffs(self, c: np.ndarray) -> np.ndarray:
        """Fourth-order centered d/dz with specular walls half a cell beyond the ends.

        Ghost nodes mirror the interior with the mode parity (-1)^k, so odd
        modes (the fluxes) vanish at the walls: the stencil is in flux form,
        conserves sum_z a_i exactly and stays skew-symmetric.
        """
        p = self.parity
        g = np.concatenate([c[..., 1:2] * p, c[..., 0:1] * p, c,
                            c[..., -1:] * p, c[..., -2:-1] * p], axis=-1)
        return (g[..., :-4] - 8.0 * g[..., 1:-3] + 8.0 * g[..., 3:-1] - g[..., 4:]) / (12.0 * self.dz)

    # -- right-hand side -------------------------------------------------

    def rhs(self, c: np.ndarray) -> np.ndarray:
        beta = self.beta
        sb = math.sqrt(beta)
        sk = self.sqrt_k[1:, None]
        a = c[:, 0, :]
        du_a = convolve_derivative_array(self.kernel, a)  # d/dz (U * a_i)
        f_h = -du_a[::-1]  # perturbation force F_i(h) = -d/dz (U * a_j)
        dc = self.dz_coeffs(c)

        out = -self.damping * c
        # transport -v d/dz: v phi_k couples to k +- 1; mode K+1 dropped
        out[:, 1:] -= (sk / sb) * dc[:, :-1]
        out[:, :-1] -= (sk / sb) * dc[:, 1:]
        # (U*w_j' - F_i(h)) d/dv h_i, with d/dv phi_k = -sqrt(beta (k+1)) phi_{k+1}
        force = (self.front_force - f_h)[:, None, :]
        out[:, 1:] -= force * (sb * sk) * c[:, :-1]
        # -beta v M w_i (U * d_z a_j) lands in mode 1
        out[:, 1] -= sb * self.w * du_a[::-1]
        return out

    # -- symmetry ----------------------------------------------------------

    def reflect(self, c: np.ndarray) -> np.ndarray:
        """(z, v) -> (-z, -v) combined with the species exchange."""
        return (c[::-1, :, ::-1] * self.parity)

    def symmetry_error(self, c: np.ndarray) -> float:
        return float(np.max(np.abs(c - self.reflect(c))))

    # -- norms -------------------------------------------------------------

    def gamma_weight(self, gamma: float) -> "GammaWeight":
        return gamma_weight(self.front.z, gamma)

    def norm_m(self, c: np.ndarray, weight: "GammaWeight | None" = None) -> float:
        zw2 = 1.0 if weight is None else weight.values**2
        return math.sqrt(float(np.sum(zw2 * c**2 / self.w[:, None, :])) * self.dz)

    def norm_d(self, c: np.ndarray, weight: "GammaWeight | None" = None) -> float:
        zw2 = 1.0 if weight is None else weight.values**2
        kw = (1.0 + self.beta * (np.arange(self.order + 1) + 1.0))[:, None]
        kw[0] = 0.0
        return math.sqrt(float(np.sum(zw2 * kw * c**2 / self.w[:, None, :])) * self.dz)

    def mass(self, c: np.ndarray) -> tuple[float, float]:
        m = np.sum(c[:, 0, :], axis=-1) * self.dz
        return float(m[0]), float(m[1])

    def null_component(self, c: np.ndarray) -> float:
        return float(np.sum(c[:, 0, :] * self.front.wp) * self.dz)

    def quadratic_energy(self, c: np.ndarray) -> float:
        """(1/2) <a, A a> + (1/2) ||(I-P) h||_M^2."""
        a = c[:, 0, :]
        return 0.5 * self.operator_a.form(a) + 0.5 * float(np.sum(c[:, 1:] ** 2 / self.w[:, None, :])) * self.dz

    def free_energy(self, c: np.ndarray, nodes: int | None = None) -> float:
        """Lyapunov functional of f = w M + h minus its value at h = 0.

        Velocity integrals use the (K+1)-point Gauss-Hermite rule in
        sqrt(beta) v, whose nodes are the characteristic speeds of the
        truncated system; it integrates every quadratic term of the expansion
        exactly.  Richer rules sample the truncated series far out in the
        tails where it is not positive.  The entropy difference is formed with
        log1p to avoid cancellation.  The interaction with the front uses the full-line
        convolution (asymptotic constant extension).
        """
        nq = self.order + 1 if nodes is None else int(nodes)
        xi, wq = hermite_e.hermegauss(nq)
        wq = wq / math.sqrt(2.0 * math.pi)
        hq = self.basis.polynomials(xi)  # (K+1, nq)
        r = np.einsum("ikz,kq->iqz", c, hq)  # h / M at the nodes
        w = self.w[:, None, :]
        total = w + r
        if np.any(total <= 0):
            i, q, z = np.argwhere(total <= 0)[0]
            raise NumericalError(
                f"f = wM + h is not positive at species {i + 1}, xi = {xi[q]:.4g}, "
                f"z = {self.front.z[z]:.4g}; perturbation too large for the entropy")
        ent = r * np.log(w) + total * np.log1p(r / w)
        a = c[:, 0, :]
        local = np.einsum("q,iqz->iz", wq, ent) + 0.5 * math.log(self.beta / (2 * math.pi)) * a
        e1, e2 = self.front.extensions
        uw2 = convolve_array(self.kernel, self.front.w2, e2)
        uw1 = convolve_array(self.kernel, self.front.w1, e1)
        inter = self.beta * (a[0] * uw2 + a[1] * uw1 + a[0] * convolve_array(self.kernel, a[1]))
        return float(np.sum(local) + np.sum(inter)) * self.dz


@dataclass(frozen=True)
class GammaWeight:
    gamma: float
    values: np.ndarray


def gamma_weight(z: np.ndarray, gamma: float) -> GammaWeight:
    if gamma < 0:
        raise ValidationError(f"gamma must be >= 0, got {gamma}")
    return GammaWeight(float(gamma), (1.0 + np.asarray(z) ** 2) ** gamma)


@dataclass(frozen=True)
class KineticState:
    coeffs: np.ndarray
    time: float
    model: KineticModel = field(repr=False, compare=False)

    @property
    def front(self) -> FrontProfile:
        return self.model.front

    @property
    def a(self) -> np.ndarray:
        return self.coeffs[:, 0, :]

    def with_coeffs(self, coeffs: np.ndarray, time: float | None = None) -> "KineticState":
        return replace(self, coeffs=coeffs, time=self.time if time is None else time)


def _bump(z: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((z - center) / width) ** 2)


def _zero_mass_bump(z: np.ndarray, center: float, width: float, dz: float) -> np.ndarray:
    # narrow Gaussian minus a twice-wider one of equal discrete mass
    g1 = _bump(z, center, width)
    g2 = _bump(z, center, 2.0 * width)
    return g1 - (np.sum(g1) / np.sum(g2)) * g2


def init_perturbation(kind: str, amplitude: float, front: FrontProfile | KineticModel,
                      *, width: float = 1.0, center: float = 0.0, custom: np.ndarray | None = None,
                      enforce_symmetry: bool = True, order: int | None = None) -> KineticState:
    """Symmetric, zero-mass initial perturbation.

    gaussian_density: amplitude * G(z - center) in mode 0 of species 1 and
    its mirror in species 2, where G is a Gaussian with a wider compensating
    Gaussian subtracted so each species carries zero mass.
    mode1_current: amplitude * G in mode 1 of species 1, mirrored with the
    odd-mode sign flip.
    custom: the given coefficient array (checked for symmetry).
    """
    if amplitude < 0:
        raise ValidationError(f"amplitude must be >= 0, got {amplitude}")
    model = front if isinstance(front, KineticModel) else KineticModel(front, order)
    z = model.front.z
    c = np.zeros(model.shape)
    if kind == "gaussian_density":
        g = _zero_mass_bump(z, center, width, model.dz)
        c[0, 0] = amplitude * g
        c[1, 0] = amplitude * g[::-1]
    elif kind == "mode1_current":
        g = _bump(z, center, width)
        c[0, 1] = amplitude * g
        c[1, 1] = -amplitude * g[::-1]
    elif kind == "custom":
        if custom is None:
            raise ValidationError("custom perturbation needs a coefficient array")
        c = np.array(custom, dtype=float)
        if c.shape != model.shape:
            raise ValidationError(f"custom coefficients must have shape {model.shape}, got {c.shape}")
        if enforce_symmetry and model.symmetry_error(c) > 1e-13:
            raise ValidationError(
                f"custom perturbation violates the mirror symmetry by {model.symmetry_error(c):.3e}")
    else:
        raise ValidationError(f"unknown perturbation kind {kind!r}")
    return KineticState(coeffs=c, time=0.0, model=model)


def rhs(state: KineticState) -> np.ndarray:
    return state.model.rhs(state.coeffs)


def cfl_bound(model: KineticModel, cfl: float = 1.0) -> float:
    return cfl * model.dz / model.max_speed


def step_rk4(state: KineticState, dt: float, *, project_symmetry: bool = False,
             cfl: float = 1.0) -> KineticState:
    """One classical four-stage Runge-Kutta step (negative dt allowed)."""
    model = state.model
    bound = cfl_bound(model, cfl)
    if abs(dt) > bound:
        raise ValidationError(f"dt = {dt} violates the CFL bound {bound:.6g} "
                              f"(dz = {model.dz:.4g}, max speed = {model.max_speed:.4g})")
    c = state.coeffs
    k1 = model.rhs(c)
    k2 = model.rhs(c + 0.5 * dt * k1)
    k3 = model.rhs(c + 0.5 * dt * k2)
    k4 = model.rhs(c + dt * k3)
    new = c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if project_symmetry:
        new = 0.5 * (new + model.reflect(new))
    return state.with_coeffs(new, state.time + dt)


# --------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    norm_M: float
    norm_D: float
    norm_M_gamma: float
    dnorm_t_M: float
    dnorm_z_M: float
    energy_combined: float
    free_energy: float
    mass_1: float
    mass_2: float
    null_component: float
    symmetry_error: float


CSV_COLUMNS = tuple(f.name for f in fields(DiagnosticsRecord))


def diagnostics(state: KineticState, energy_constant: float | None = None,
                weight: GammaWeight | None = None) -> DiagnosticsRecord:
    model = state.model
    c = state.coeffs
    kc = default_energy_constant(model.beta) if energy_constant is None else energy_constant
    weight = weight or model.gamma_weight(DEFAULT_GAMMA)
    n_m = model.norm_m(c)
    d_t = model.norm_m(model.rhs(c))
    d_z = model.norm_m(model.dz_coeffs(c))
    m1, m2 = model.mass(c)
    return DiagnosticsRecord(
        t=state.time, norm_M=n_m, norm_D=model.norm_d(c), norm_M_gamma=model.norm_m(c, weight),
        dnorm_t_M=d_t, dnorm_z_M=d_z,
        energy_combined=kc * (n_m**2 + d_t**2) + d_z**2,
        free_energy=model.free_energy(c), mass_1=m1, mass_2=m2,
        null_component=model.null_component(c), symmetry_error=model.symmetry_error(c),
    )


def norm_M(state: KineticState, weight: GammaWeight | None = None) -> float:
    return state.model.norm_m(state.coeffs, weight)


def norm_D(state: KineticState, weight: GammaWeight | None = None) -> float:
    return state.model.norm_d(state.coeffs, weight)


def free_energy_G(state: KineticState) -> float:
    return state.model.free_energy(state.coeffs)


@dataclass
class Trajectory:
    records: list[DiagnosticsRecord]
    final: KineticState | None = None

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def evolve(state: KineticState, t_end: float, record_every: int = 10, dt: float | None = None,
           *, energy_constant: float | None = None, gamma: float = DEFAULT_GAMMA,
           enforce_symmetry: bool = False, blowup_factor: float = 1e6, cfl: float = 1.0) -> Trajectory:
    """Integrate to ``t_end`` with RK4, recording diagnostics every ``record_every`` steps.

    The step is ``dt`` (default: the front's ModelParams.dt) shrunk so that an
    integer number of steps reaches ``t_end`` exactly.
    """
    if not t_end > 0:
        raise ValidationError(f"t_end must be > 0, got {t_end}")
    if record_every < 1:
        raise ValidationError(f"record_every must be >= 1, got {record_every}")
    model = state.model
    dt = model.front.params.dt if dt is None else dt
    nsteps = max(1, int(math.ceil(t_end / dt - 1e-9)))
    dt = t_end / nsteps
    t0 = state.time
    weight = model.gamma_weight(gamma)
    records = [diagnostics(state, energy_constant, weight)]
    limit = blowup_factor * records[0].norm_M
    for n in range(1, nsteps + 1):
        state = step_rk4(state, dt, project_symmetry=enforce_symmetry, cfl=cfl)
        state = state.with_coeffs(state.coeffs, t0 + n * dt)
        if n % record_every == 0 or n == nsteps:
            rec = diagnostics(state, energy_constant, weight)
            records.append(rec)
            if not math.isfinite(rec.norm_M) or (limit > 0 and rec.norm_M > limit):
                raise BlowUpError(f"norm_M = {rec.norm_M:.3e} at t = {rec.t:.4g} exceeds "
                                  f"{blowup_factor:g} x initial", Trajectory(records, state))
    return Trajectory(records, state)


@dataclass(frozen=True)
class EnergyReport:
    violations: int
    max_jump: float
    decay_exponent: float
    prefactor: float
    gamma: float


def energy_monitor(trajectory: Trajectory | list[DiagnosticsRecord], rel_tol: float = 1e-9,
                   gamma: float = DEFAULT_GAMMA, column: str = "energy_combined") -> EnergyReport:
    """Count increases of the combined energy between consecutive records and
    fit E(t) ~ C (1 + t/(2 gamma))^(-p) to the record sequence."""
    records = trajectory.records if isinstance(trajectory, Trajectory) else list(trajectory)
    if not records:
        raise ValidationError("empty trajectory")
    e = np.array([getattr(r, column) for r in records])
    t = np.array([r.t for r in records])
    jumps = np.diff(e)
    tol = rel_tol * abs(e[0])
    violations = int(np.count_nonzero(jumps > tol))
    max_jump = float(jumps.max()) if jumps.size else 0.0
    ok = e > 0
    if np.count_nonzero(ok) >= 2 and np.ptp(t[ok]) > 0:
        x = np.log1p(t[ok] / (2.0 * gamma))
        slope, icpt = np.polyfit(x, np.log(e[ok]), 1)
        p, c0 = float(-slope), float(np.exp(icpt))
    else:
        p, c0 = 0.0, float(e[0])
    return EnergyReport(violations=violations, max_jump=max(max_jump, 0.0), decay_exponent=p,
                        prefactor=c0, gamma=gamma)
