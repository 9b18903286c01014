"""Operators around the front: the Fokker-Planck operator in a Hermite basis,
the second variation A of the excess free energy, its symmetrization
Atilde = sqrt(w) A sqrt(w), and the Fourier symbol of the constant-coefficient
limit."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from numpy.polynomial import hermite_e

from .errors import NumericalError, ValidationError
from .front import FrontProfile
from .model import Kernel1D, centered_gradient, convolution_matrix, convolve_array


# --------------------------------------------------------------------------
# Hermite representation in velocity


@dataclass(frozen=True)
class HermiteBasis:
    """Modes phi_k(v) = M(v) He_k(sqrt(beta) v) / sqrt(k!), k = 0..order.

    M is the one-dimensional Maxwellian with variance 1/beta; the modes are
    orthonormal for the weight 1/M.
    """

    order: int
    beta: float

    def __post_init__(self):
        if self.order < 1:
            raise ValidationError(f"Hermite order must be >= 1, got {self.order}")
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")

    @property
    def size(self) -> int:
        return self.order + 1

    @property
    def k(self) -> np.ndarray:
        return np.arange(self.size)

    def maxwellian(self, v):
        v = np.asarray(v, dtype=float)
        return math.sqrt(self.beta / (2 * math.pi)) * np.exp(-0.5 * self.beta * v**2)

    def polynomials(self, xi) -> np.ndarray:
        """He_k(xi)/sqrt(k!) for all k, shape (size,) + xi.shape."""
        xi = np.asarray(xi, dtype=float)
        out = np.empty((self.size,) + xi.shape)
        out[0] = 1.0
        if self.size > 1:
            out[1] = xi
        for k in range(1, self.size - 1):
            # normalized three-term recurrence
            out[k + 1] = (xi * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
        return out

    def modes(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        return self.maxwellian(v) * self.polynomials(math.sqrt(self.beta) * v)

    def velocity_matrix(self) -> np.ndarray:
        """Matrix of multiplication by v: v phi_k = (sqrt(k+1) phi_{k+1} + sqrt(k) phi_{k-1})/sqrt(beta).

        Entry [j, k] is the coefficient of phi_j in v phi_k; the truncation
        drops phi_{order+1}.
        """
        off = np.sqrt(np.arange(1, self.size)) / math.sqrt(self.beta)
        return np.diag(off, 1) + np.diag(off, -1)

    def dv_matrix(self) -> np.ndarray:
        """Matrix of d/dv: d/dv phi_k = -sqrt(beta) sqrt(k+1) phi_{k+1} (truncated)."""
        return np.diag(-math.sqrt(self.beta) * np.sqrt(np.arange(1, self.size)), -1)

    def max_speed(self) -> float:
        """Largest characteristic speed of the truncated transport: the largest
        root of He_{order+1} divided by sqrt(beta)."""
        c = np.zeros(self.order + 2)
        c[-1] = 1.0
        return float(np.max(hermite_e.hermeroots(c))) / math.sqrt(self.beta)


def fp_matrix_hermite(basis: HermiteBasis) -> np.ndarray:
    """The Fokker-Planck operator is diagonal in this basis with eigenvalue -beta k."""
    return np.diag(-basis.beta * basis.k.astype(float))


def dissipation_weights(basis: HermiteBasis) -> np.ndarray:
    """Per-mode weights of ||(I-P)g||_M^2 + ||d_v (I-P)g||_M^2, zero for mode 0."""
    w = 1.0 + basis.beta * (basis.k + 1.0)
    w[0] = 0.0
    return w


def lgap_ratio(basis: HermiteBasis, coeffs: np.ndarray) -> float | None:
    """-<g, Lg>_M / ||(I-P)g||_D^2, or None when (I-P)g = 0."""
    c = np.asarray(coeffs, dtype=float)
    den = float(np.sum(dissipation_weights(basis) * c**2))
    if den == 0.0:
        return None
    num = float(np.sum(basis.beta * basis.k * c**2))
    return num / den


def check_lgap(basis: HermiteBasis, samples: int, rng: np.random.Generator | int | None = 0) -> float:
    """Empirical minimum of the Fokker-Planck gap ratio over random coefficient vectors."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    best = math.inf
    for _ in range(samples):
        r = lgap_ratio(basis, rng.standard_normal(basis.size))
        if r is not None:
            best = min(best, r)
    return best


# --------------------------------------------------------------------------
# second variation A


class OperatorA:
    """Matrix-free (A g)_i = g_i / w_i + beta U*g_j with zero extension."""

    def __init__(self, front: FrontProfile):
        self.front = front
        self.beta = front.beta
        self.kernel = front.kernel
        self.dz = front.grid.dz
        self.w = front.w
        self._null = None

    def apply(self, g: np.ndarray) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        conv = convolve_array(self.kernel, g)
        return g / self.w + self.beta * conv[::-1]

    __call__ = apply

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return float(np.sum(np.asarray(f) * np.asarray(g)) * self.dz)

    def norm(self, f: np.ndarray) -> float:
        return math.sqrt(self.inner(f, f))

    def form(self, g: np.ndarray) -> float:
        return self.inner(g, self.apply(g))

    @property
    def null_vector(self) -> np.ndarray:
        return self.front.wp

    def sparse_matrix(self):
        import scipy.sparse as sp

        nz = self.front.grid.nz
        T = sp.csr_matrix(convolution_matrix(self.kernel, nz))
        return sp.bmat([[sp.diags(1.0 / self.w[0]), self.beta * T],
                        [self.beta * T, sp.diags(1.0 / self.w[1])]], format="csc")

    def discrete_null_vector(self, iterations: int = 3, shift: float = 1e-10) -> np.ndarray:
        """Null vector of the discrete A by inverse iteration started from w'.

        Scaled to the norm of w' and signed to align with it.
        """
        if self._null is None:
            import scipy.sparse as sp
            from scipy.sparse.linalg import splu

            a = self.sparse_matrix()
            lu = splu(a + shift * sp.identity(a.shape[0], format="csc"))
            x = self.front.wp.ravel().copy()
            for _ in range(iterations):
                x = lu.solve(x)
                x /= np.linalg.norm(x)
            x *= np.sign(x @ self.front.wp.ravel()) * np.linalg.norm(self.front.wp)
            self._null = x.reshape(self.front.wp.shape)
        return self._null


def apply_A(op: OperatorA, g: np.ndarray) -> np.ndarray:
    return op.apply(g)


@dataclass(frozen=True)
class QuadraticFormCheck:
    direct: float
    measure: float
    agree: bool
    nonnegative: bool
    excluded_mass: float

    def __bool__(self) -> bool:
        return self.agree


def quadratic_form_identity(op: OperatorA, g: np.ndarray, tol: float = 1e-8,
                            floor: float = 1e-12, null: str = "discrete") -> QuadraticFormCheck:
    """Compare <g, A g> with the double-integral form

        -beta sum_{z,z'} [g1(z)/w1'(z) - g2(z')/w2'(z')]^2 U(z-z') w1'(z) w2'(z') dz^2,

    which is nonnegative because w1' > 0 > w2'.  The identity rests on
    A w' = 0; with ``null="discrete"`` the exact null vector of the discrete A
    stands in for w' so the two sides agree to rounding, while
    ``null="derivative"`` uses the stored finite-difference w' and agrees
    only to O(dz^2).  Nodes with |w'| below
    ``floor * max|w'|`` are excluded from the measure form; the fraction of
    ||g||^2 living on them is returned as ``excluded_mass``.  Agreement is
    judged relative to ||g||^2 / min(w).
    """
    g = np.asarray(g, dtype=float)
    front = op.front
    if null == "discrete":
        wp = op.discrete_null_vector()
    elif null == "derivative":
        wp = front.wp
    else:
        raise ValidationError(f"unknown null-vector source {null!r}")
    thr = floor * float(np.max(np.abs(wp)))
    keep = np.abs(wp) >= thr
    total = float(np.sum(g**2))
    excluded = float(np.sum(g[~keep] ** 2)) / total if total > 0 else 0.0

    direct = op.form(g)
    q = np.zeros_like(g)
    q[keep] = g[keep] / wp[keep]
    m1 = np.where(keep[0], wp[0], 0.0)
    m2 = np.where(keep[1], wp[1], 0.0)
    T = convolution_matrix(front.kernel, front.grid.nz)  # includes dz
    diff2 = (q[0][:, None] - q[1][None, :]) ** 2
    measure = -op.beta * float(np.sum(diff2 * T * (m1[:, None] * m2[None, :]))) * op.dz

    scale = total * op.dz / float(np.min(front.w)) if total > 0 else 1.0
    agree = abs(direct - measure) <= tol * scale
    if excluded > 0:
        import warnings

        warnings.warn(f"quadratic form identity: {excluded:.3e} of ||g||^2 on excluded nodes")
    return QuadraticFormCheck(direct=direct, measure=measure, agree=bool(agree),
                              nonnegative=bool(measure >= 0.0), excluded_mass=excluded)


# --------------------------------------------------------------------------
# symmetrized operator


def build_Atilde(front: FrontProfile) -> np.ndarray:
    """Dense Atilde = I + beta [[0, S1 T S2], [S2 T S1, 0]], S_i = diag(sqrt(w_i)).

    T is the zero-extension convolution matrix with the dz quadrature weight
    folded in; the result is symmetric in the plain Euclidean product.
    """
    nz = front.grid.nz
    T = convolution_matrix(front.kernel, nz)
    s1, s2 = np.sqrt(front.w1), np.sqrt(front.w2)
    off = front.beta * (s1[:, None] * T * s2[None, :])
    mat = np.eye(2 * nz)
    mat[:nz, nz:] = off
    mat[nz:, :nz] = off.T
    return mat


def predicted_null_vector(front: FrontProfile) -> np.ndarray:
    """w_i'/sqrt(w_i), stacked, unit Euclidean norm."""
    u = np.concatenate([front.w1p / np.sqrt(front.w1), front.w2p / np.sqrt(front.w2)])
    return u / np.linalg.norm(u)


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: np.ndarray
    gap: float | None
    null_residual: float
    null_alignment: float
    max_pair_residual: float
    eigenvectors: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "gap": None if self.gap is None else float(self.gap),
            "null_residual": float(self.null_residual),
            "null_alignment": float(self.null_alignment),
            "max_pair_residual": float(self.max_pair_residual),
        }


def spectrum_Atilde(matrix: np.ndarray, k: int = 6, predicted_null: np.ndarray | None = None,
                    method: str = "dense", keep_vectors: bool = False) -> SpectrumReport:
    """k smallest eigenpairs of a symmetric matrix, with null-vector diagnostics.

    ``null_alignment`` is |cos| between the lowest eigenvector and
    ``predicted_null``; ``null_residual`` is ||M u|| for the normalized
    prediction.  The gap (second eigenvalue) is only reported when the
    alignment exceeds 0.999.
    """
    n = matrix.shape[0]
    k = min(k, n)
    if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-12 * max(1.0, np.abs(matrix).max())):
        raise ValidationError("matrix is not symmetric")
    try:
        if method == "dense":
            vals, vecs = scipy.linalg.eigh(matrix, subset_by_index=[0, k - 1])
        elif method == "shift-invert":
            from scipy.sparse.linalg import ArpackNoConvergence, eigsh

            try:
                vals, vecs = eigsh(matrix, k=k, sigma=-1e-3, which="LM", tol=1e-13)
            except ArpackNoConvergence as exc:
                raise NumericalError(f"shift-invert iteration did not converge: {exc}") from exc
            order = np.argsort(vals)
            vals, vecs = vals[order], vecs[:, order]
        else:
            raise ValidationError(f"unknown eigen method {method!r}")
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-solve failed: {exc}") from exc

    pair_res = max(float(np.linalg.norm(matrix @ vecs[:, j] - vals[j] * vecs[:, j]))
                   for j in range(k))
    if predicted_null is not None:
        u = predicted_null / np.linalg.norm(predicted_null)
        align = float(abs(vecs[:, 0] @ u))
        null_res = float(np.linalg.norm(matrix @ u))
    else:
        align, null_res = float("nan"), float("nan")
    gap = float(vals[1]) if (k > 1 and align > 0.999) else None
    return SpectrumReport(eigenvalues=vals, gap=gap, null_residual=null_res,
                          null_alignment=align, max_pair_residual=pair_res,
                          eigenvectors=vecs if keep_vectors else None)


def analyze_front_spectrum(front: FrontProfile, k: int = 6, method: str = "dense") -> SpectrumReport:
    return spectrum_Atilde(build_Atilde(front), k, predicted_null_vector(front), method=method)


@dataclass(frozen=True)
class SymbolReport:
    lower: float
    upper: float
    gap_edge: float
    symbol_at_zero: float
    max_abs_symbol: float
    coupling: float  # beta sqrt(rho+ rho-)
    xi: np.ndarray
    symbol: np.ndarray

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in
                ("lower", "upper", "gap_edge", "symbol_at_zero", "max_abs_symbol", "coupling")}


def kernel_symbol(kernel: Kernel1D, n_fft: int = 1 << 16) -> tuple[np.ndarray, np.ndarray]:
    """Fourier transform of the sampled kernel on [0, pi/dz] via a zero-padded FFT.

    The samples are rotated so that offset 0 sits at index 0, which makes the
    transform of the even kernel real.
    """
    m = kernel.half_count
    n_fft = max(n_fft, 4 * kernel.weights.size)
    buf = np.zeros(n_fft)
    buf[:m + 1] = kernel.weights[m:]
    buf[n_fft - m:] = kernel.weights[:m]
    spec = np.fft.rfft(buf).real * kernel.dz
    xi = 2 * np.pi * np.arange(spec.size) / (n_fft * kernel.dz)
    return xi, spec


def symbol_spectrum_A0(beta: float, rho_plus: float, rho_minus: float, kernel: Kernel1D,
                       n_fft: int = 1 << 16) -> SymbolReport:
    """Spectral interval of the constant-coefficient operator, from the symbol
    eigenvalues 1 +- beta sqrt(rho+ rho-) Uhat(xi)."""
    xi, uhat = kernel_symbol(kernel, n_fft)
    coupling = beta * math.sqrt(rho_plus * rho_minus)
    branches = np.concatenate([1.0 + coupling * uhat, 1.0 - coupling * uhat])
    max_abs = float(np.max(np.abs(uhat)))
    return SymbolReport(lower=float(branches.min()), upper=float(branches.max()),
                        gap_edge=1.0 - coupling * max_abs, symbol_at_zero=float(uhat[0]),
                        max_abs_symbol=max_abs, coupling=coupling, xi=xi, symbol=uhat)


def build_A0tilde(beta: float, rho_plus: float, rho_minus: float, kernel: Kernel1D, nz: int) -> np.ndarray:
    T = convolution_matrix(kernel, nz)
    c = beta * math.sqrt(rho_plus * rho_minus)
    mat = np.eye(2 * nz)
    mat[:nz, nz:] = c * T
    mat[nz:, :nz] = c * T
    return mat


# --------------------------------------------------------------------------
# lower-bound probe for ||(Au)'||


@dataclass(frozen=True)
class AprimeProbe:
    minimum: float
    ratios: np.ndarray
    skipped: int


def aprime_ratio(op: OperatorA, u: np.ndarray, orth_tol: float = 1e-10) -> float | None:
    """||(Au)'||^2 / (alpha^2 + ||Q utilde'||^2) for u orthogonal to w'.

    u = alpha (w1', -w2') + utilde with each component of utilde orthogonal
    to the matching component of w'; Q removes the w'' direction.  Returns
    None for a vanishing denominator.
    """
    u = np.asarray(u, dtype=float)
    wp = op.front.wp
    dz = op.dz
    if abs(op.inner(u, wp)) > orth_tol * op.norm(u) * op.norm(wp):
        raise ValidationError("u must be orthogonal to w' (null direction of A)")
    wt = np.stack([wp[0], -wp[1]])
    alpha = op.inner(u, wt) / op.inner(wt, wt)
    ut = u - alpha * wt
    utp = centered_gradient(ut, dz)
    wpp = centered_gradient(wp, dz)
    qutp = utp - (op.inner(utp, wpp) / op.inner(wpp, wpp)) * wpp
    den = alpha**2 + op.inner(qutp, qutp)
    if den <= 1e-300:
        return None
    aup = centered_gradient(op.apply(u), dz)
    return op.inner(aup, aup) / den


def random_smooth_pair(op: OperatorA, rng: np.random.Generator, bumps: int = 4) -> np.ndarray:
    """Sum of random Gaussian bumps in each component, projected orthogonal to w'."""
    z = op.front.z
    zmax = op.front.grid.half_width
    u = np.zeros((2, z.size))
    for i in range(2):
        for _ in range(bumps):
            c = rng.uniform(-zmax / 2, zmax / 2)
            s = rng.uniform(0.3, 2.0)
            u[i] += rng.standard_normal() * np.exp(-0.5 * ((z - c) / s) ** 2)
    wp = op.front.wp
    return u - (op.inner(u, wp) / op.inner(wp, wp)) * wp


def probe_Aprime_bound(op: OperatorA, samples: int, rng: np.random.Generator | int | None = 0) -> AprimeProbe:
    """Empirical minimum of the ||(Au)'|| lower-bound ratio over random smooth u."""
    if samples < 1:
        raise ValidationError("samples must be >= 1")
    rng = np.random.default_rng(rng)
    ratios = []
    skipped = 0
    for _ in range(samples):
        r = aprime_ratio(op, random_smooth_pair(op, rng))
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    ratios = np.array(ratios)
    return AprimeProbe(minimum=float(ratios.min()) if ratios.size else float("nan"),
                       ratios=ratios, skipped=skipped)
