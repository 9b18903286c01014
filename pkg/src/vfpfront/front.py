"""Front profile: damped fixed-point solution of the Euler-Lagrange equations
ln w_i + beta U*w_j = C on the line, with the mirror symmetry w_2(z) = w_1(-z)."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConvergenceError, ValidationError
from .model import (Extension, Grid1D, Kernel1D, ModelParams, ScalarField,
                    centered_gradient, convolve_array)
from .thermo import Coexistence, chemical_potential_constant, coexistence_densities

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class FrontReport:
    el_residual: float
    elp_residual: float
    excess_energy: float
    tail_rate: float
    iterations: int
    energy_history: tuple = ()


@dataclass(frozen=True)
class FrontProfile:
    params: ModelParams
    grid: Grid1D
    kernel: Kernel1D
    w1: np.ndarray
    w2: np.ndarray
    w1p: np.ndarray
    w2p: np.ndarray
    rho_plus: float
    rho_minus: float
    el_constant: float
    report: FrontReport | None = field(default=None, compare=False)

    @property
    def beta(self) -> float:
        return self.params.beta

    @property
    def z(self) -> np.ndarray:
        return self.grid.z

    def field1(self) -> ScalarField:
        return ScalarField.constant_ext(self.w1, self.rho_minus, self.rho_plus)

    def field2(self) -> ScalarField:
        return ScalarField.constant_ext(self.w2, self.rho_plus, self.rho_minus)

    @property
    def w(self) -> np.ndarray:
        return np.stack([self.w1, self.w2])

    @property
    def wp(self) -> np.ndarray:
        return np.stack([self.w1p, self.w2p])

    @property
    def extensions(self) -> tuple[Extension, Extension]:
        return (Extension("constant", self.rho_minus, self.rho_plus),
                Extension("constant", self.rho_plus, self.rho_minus))


def profile_from_density(w1: np.ndarray, params: ModelParams, grid: Grid1D | None = None,
                         kernel: Kernel1D | None = None,
                         coex: Coexistence | None = None) -> FrontProfile:
    """Wrap a species-1 density into a symmetric FrontProfile (w2 is its mirror)."""
    grid = grid or params.grid()
    kernel = kernel or params.kernel(grid)
    coex = coex or coexistence_densities(params.beta, params.n)
    w1 = np.array(w1, dtype=float)
    w2 = w1[::-1].copy()
    return FrontProfile(
        params=params, grid=grid, kernel=kernel, w1=w1, w2=w2,
        w1p=centered_gradient(w1, grid.dz), w2p=centered_gradient(w2, grid.dz),
        rho_plus=coex.rho_plus, rho_minus=coex.rho_minus,
        el_constant=chemical_potential_constant(coex.rho_plus, coex.rho_minus, params.beta),
    )


def sharp_step(params: ModelParams, grid: Grid1D | None = None) -> FrontProfile:
    """The step rho- for z < 0, rho+ for z >= 0 (initial guess of the solver)."""
    grid = grid or params.grid()
    coex = coexistence_densities(params.beta, params.n)
    w1 = np.where(grid.z < 0, coex.rho_minus, coex.rho_plus)
    return profile_from_density(w1, params, grid, coex=coex)


def solve_front(params: ModelParams, tol: float = 1e-12, max_iter: int = 20000,
                damping: float = 0.5, *, require_supercritical: bool = True,
                initial: np.ndarray | None = None, monitor_every: int = 0) -> FrontProfile:
    """Damped fixed-point iteration w1 <- (1-d) w1 + d exp(C - beta U*w2).

    w2 is re-imposed as the mirror of w1 after every sweep and both densities
    are extended by their asymptotic constants.  Iteration stops when the
    sup-norm of the update drops below ``tol``.
    """
    params.validate()
    if not 0 < damping <= 1:
        raise ValidationError(f"damping must lie in (0, 1], got {damping}")
    if require_supercritical and not params.supercritical:
        raise ValidationError(
            f"no front for beta*n = {params.beta * params.n} <= 2 (homogeneous phase only)")
    grid = params.grid()
    kernel = params.kernel(grid)
    coex = coexistence_densities(params.beta, params.n)
    rp, rm, beta = coex.rho_plus, coex.rho_minus, params.beta
    c = chemical_potential_constant(rp, rm, beta)
    ext2 = Extension("constant", rp, rm)

    if initial is None:
        w1 = np.where(grid.z < 0, rm, rp).astype(float)
    else:
        w1 = np.array(initial, dtype=float)
    history = []
    upd = math.inf
    it = 0
    while True:
        w2 = w1[::-1]
        target = np.exp(c - beta * convolve_array(kernel, w2, ext2))
        step = damping * (target - w1)
        upd = float(np.max(np.abs(step)))
        w1 = w1 + step
        if monitor_every and it % monitor_every == 0:
            e = _excess(w1, w1[::-1], grid, kernel, beta, rp, rm)
            history.append((it, e))
            log.debug("front sweep %d: update %.3e, excess %.12g", it, upd, e)
        if upd < tol:
            break
        it += 1
        if it >= max_iter:
            raise ConvergenceError("front iteration did not converge", it, upd)

    front = profile_from_density(w1, params, grid, kernel, coex)
    report = FrontReport(
        el_residual=el_residual(front),
        elp_residual=elp_residual(front),
        excess_energy=excess_free_energy(front),
        tail_rate=_safe_tail_rate(front),
        iterations=it,
        energy_history=tuple(history),
    )
    return replace(front, report=report)


def _safe_tail_rate(front: FrontProfile) -> float:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return tail_decay_rate(front)
    except ValidationError:
        return float("nan")


def el_residual(front: FrontProfile) -> float:
    """max_{i,z} |ln w_i + beta (U*w_j) - C| with constant extension."""
    e1, e2 = front.extensions
    b = front.beta
    r1 = np.log(front.w1) + b * convolve_array(front.kernel, front.w2, e2) - front.el_constant
    r2 = np.log(front.w2) + b * convolve_array(front.kernel, front.w1, e1) - front.el_constant
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def elp_residual(front: FrontProfile) -> float:
    """Sup-norm of w_i'/w_i + beta U*w_j' (derivatives zero-extended)."""
    b = front.beta
    r1 = front.w1p / front.w1 + b * convolve_array(front.kernel, front.w2p)
    r2 = front.w2p / front.w2 + b * convolve_array(front.kernel, front.w1p)
    return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))


def grand_potential_density(rho1, rho2, beta: float, mu: float):
    """f(rho1, rho2) - mu (rho1 + rho2); both coexisting phases are its minima."""
    rho1 = np.asarray(rho1, dtype=float)
    rho2 = np.asarray(rho2, dtype=float)
    return rho1 * np.log(rho1) + rho2 * np.log(rho2) + beta * rho1 * rho2 - mu * (rho1 + rho2)


def cross_energy(w1: np.ndarray, w2: np.ndarray, kernel: Kernel1D, beta: float) -> float:
    """(beta/2) sum_{z,z'} U(z-z') [w1(z)-w1(z')][w2(z')-w2(z)] dz^2 over domain pairs."""
    m = kernel.half_count
    dz = kernel.dz
    total = 0.0
    for j in range(1, m + 1):
        # pairs (z, z - s_j) and (z, z + s_j) contribute equally by symmetry of the summand
        d1 = w1[j:] - w1[:-j]
        d2 = w2[:-j] - w2[j:]
        total += 2.0 * kernel.weights[m + j] * float(np.sum(d1 * d2))
    return 0.5 * beta * total * dz * dz


def _excess(w1, w2, grid: Grid1D, kernel: Kernel1D, beta: float, rp: float, rm: float) -> float:
    mu = chemical_potential_constant(rp, rm, beta) + 1.0
    local = grand_potential_density(w1, w2, beta, mu) - grand_potential_density(rp, rm, beta, mu)
    return float(np.sum(local) * grid.dz) + cross_energy(w1, w2, kernel, beta)


def excess_free_energy(front: FrontProfile) -> float:
    """Excess free energy of the profile relative to the homogeneous phases.

    The local part uses f - mu (rho1 + rho2) with mu = C + 1 the chemical
    potential shared by both phases, so that the integrand vanishes in both
    tails and the front is a minimizer without a mass constraint.
    """
    return _excess(front.w1, front.w2, front.grid, front.kernel, front.beta,
                   front.rho_plus, front.rho_minus)


def fit_tail_rate(z: np.ndarray, values: np.ndarray, asymptote: float,
                  noise_floor: float = 1e-13) -> float:
    """Least-squares slope alpha of ln|values - asymptote| ~ -alpha z."""
    dev = np.abs(np.asarray(values, dtype=float) - asymptote)
    ok = dev > noise_floor * max(1.0, abs(asymptote))
    if not np.all(ok):
        # keep the leading run of resolvable values
        stop = int(np.argmin(ok)) if ok[0] else 0
        if stop < 3:
            raise ValidationError("tail window has no resolvable variation")
        warnings.warn(f"tail window shrunk to {stop} of {dev.size} nodes (below noise floor)")
        z, dev = z[:stop], dev[:stop]
    if dev.size < 3:
        raise ValidationError("tail window has fewer than 3 nodes")
    slope = np.polyfit(z, np.log(dev), 1)[0]
    return float(-slope)


def tail_decay_rate(front: FrontProfile) -> float:
    """Exponential rate at which w1 approaches rho+ on the window [Z/2, Z - R]."""
    z = front.z
    zmax = front.grid.half_width
    window = (z >= zmax / 2) & (z <= zmax - front.kernel.radius)
    if np.count_nonzero(window) < 3:
        raise ValidationError("tail window [Z/2, Z-R] is empty")
    return fit_tail_rate(z[window], front.w1[window], front.rho_plus)


@dataclass(frozen=True)
class FrontChecks:
    symmetry_error: float
    centering_error: float
    monotone: bool
    strict_bounds: bool
    tail_error: float

    def ok(self, tail_tol: float = 1e-5) -> bool:
        return (self.symmetry_error == 0.0 and self.centering_error == 0.0 and self.monotone
                and self.strict_bounds and self.tail_error < tail_tol)


def check_front(front: FrontProfile) -> FrontChecks:
    w1, w2 = front.w1, front.w2
    c = front.grid.center
    return FrontChecks(
        symmetry_error=float(np.max(np.abs(w1 - w2[::-1]))),
        centering_error=float(abs(w1[c] - w2[c])),
        monotone=bool(np.all(np.diff(w1) >= 0) and np.all(np.diff(w2) <= 0)),
        strict_bounds=bool(np.all((w1 > front.rho_minus) & (w1 < front.rho_plus)
                                  & (w2 > front.rho_minus) & (w2 < front.rho_plus))),
        tail_error=float(max(abs(w1[0] - front.rho_minus), abs(w1[-1] - front.rho_plus))),
    )
