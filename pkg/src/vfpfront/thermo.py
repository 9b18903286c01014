"""Homogeneous phase diagram of the two-species mixture."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class Coexistence:
    rho_plus: float
    rho_minus: float
    m: float

    @property
    def n(self) -> float:
        return self.rho_plus + self.rho_minus


def eval_double_well(rho1: float, rho2: float, beta: float) -> float:
    """Thermodynamic free energy rho1 ln rho1 + rho2 ln rho2 + beta rho1 rho2."""
    if rho1 <= 0 or rho2 <= 0:
        raise ValidationError(f"densities must be positive, got ({rho1}, {rho2})")
    return rho1 * math.log(rho1) + rho2 * math.log(rho2) + beta * rho1 * rho2


def is_supercritical(beta: float, n: float) -> bool:
    return beta * n > 2.0


def chemical_potential_constant(rho_plus: float, rho_minus: float, beta: float) -> float:
    """The common Euler-Lagrange constant C = ln rho+ + beta rho-."""
    return math.log(rho_plus) + beta * rho_minus


def coexistence_densities(beta: float, n: float, tol: float = 1e-12) -> Coexistence:
    """Coexisting densities from artanh(m) = (beta n / 2) m.

    Equal chemical potentials at fixed total density reduce to this scalar
    equation for the order parameter m; the largest root in [0, 1) is found
    by bisection.  Returns m = 0 exactly at or below the critical point.
    """
    if not (beta > 0 and n > 0 and tol > 0):
        raise ValidationError(f"need beta, n, tol > 0; got {beta}, {n}, {tol}")
    half = 0.5 * n
    if beta * n <= 2.0:
        return Coexistence(half, half, 0.0)

    slope = 0.5 * beta * n

    def g(m: float) -> float:
        return math.atanh(m) - slope * m

    lo, hi = max(tol, 1e-3), 1.0 - 1e-12
    # g < 0 just above 0 (slope > 1) and g -> +inf at 1
    if not (g(lo) < 0 < g(hi)):
        return Coexistence(half, half, 0.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if abs(gm) < tol or not lo < mid < hi:
            break
        if gm < 0:
            lo = mid
        else:
            hi = mid
    return Coexistence(half * (1.0 + mid), half * (1.0 - mid), mid)
