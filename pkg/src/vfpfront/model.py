"""Shared domain types: parameters, the symmetric grid, the interaction kernel
and the discrete convolution used by every other module."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError


class KernelKind(str, enum.Enum):
    BIWEIGHT = "biweight"
    BUMP = "bump"


@dataclass(frozen=True)
class ModelParams:
    beta: float = 1.25
    n: float = 2.0
    kernel_kind: KernelKind = KernelKind.BIWEIGHT
    kernel_radius: float = 1.0
    half_width: float = 12.0
    nz: int = 1025
    hermite_order: int = 16
    dt: float = 0.002

    def __post_init__(self):
        object.__setattr__(self, "kernel_kind", KernelKind(self.kernel_kind))

    def validate(self) -> "ModelParams":
        if not self.beta > 0:
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        if not self.n > 0:
            raise ValidationError(f"n must be > 0, got {self.n}")
        if not self.kernel_radius > 0:
            raise ValidationError(f"kernel_radius must be > 0, got {self.kernel_radius}")
        if self.half_width < 10 * self.kernel_radius:
            raise ValidationError(
                f"half_width must be >= 10*kernel_radius ({10 * self.kernel_radius}), "
                f"got {self.half_width}"
            )
        if self.nz < 16:
            raise ValidationError(f"nz must be >= 16, got {self.nz}")
        if self.nz % 2 == 0:
            raise ValidationError(f"nz must be odd so that z=0 is a node, got {self.nz}")
        if self.hermite_order < 2:
            raise ValidationError(f"hermite_order must be >= 2, got {self.hermite_order}")
        if not self.dt > 0:
            raise ValidationError(f"dt must be > 0, got {self.dt}")
        return self

    @property
    def dz(self) -> float:
        return 2.0 * self.half_width / (self.nz - 1)

    @property
    def supercritical(self) -> bool:
        return self.beta * self.n > 2.0

    def grid(self) -> "Grid1D":
        return build_grid(self.half_width, self.nz)

    def kernel(self, grid: "Grid1D | None" = None) -> "Kernel1D":
        return build_kernel(self.kernel_kind, self.kernel_radius, grid or self.grid())


@dataclass(frozen=True)
class Grid1D:
    z: np.ndarray
    dz: float

    @property
    def nz(self) -> int:
        return self.z.size

    @property
    def half_width(self) -> float:
        return float(self.z[-1])

    @property
    def center(self) -> int:
        return (self.nz - 1) // 2


def build_grid(half_width: float, nz: int) -> Grid1D:
    """Uniform grid on [-Z, Z] with an odd node count.

    Nodes are built as integer multiples of dz so that z[k] == -z[nz-1-k]
    holds bit for bit.
    """
    if nz % 2 == 0:
        raise ValidationError(f"nz must be odd (centering node required), got {nz}")
    if nz < 3:
        raise ValidationError(f"nz must be >= 3, got {nz}")
    if not half_width > 0:
        raise ValidationError(f"half_width must be > 0, got {half_width}")
    c = (nz - 1) // 2
    dz = half_width / c
    z = dz * np.arange(-c, c + 1, dtype=float)
    z.setflags(write=False)
    return Grid1D(z=z, dz=dz)


# --------------------------------------------------------------------------
# kernel


def _profile(kind: KernelKind, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized kernel shape and its derivative in the scaled variable x = s/R."""
    inside = np.abs(x) < 1.0
    u = np.zeros_like(x)
    du = np.zeros_like(x)
    xi = x[inside]
    if kind is KernelKind.BIWEIGHT:
        u[inside] = (1.0 - xi**2) ** 2
        du[inside] = -4.0 * xi * (1.0 - xi**2)
    else:
        q = 1.0 - xi**2
        e = np.exp(-1.0 / q)
        u[inside] = e
        du[inside] = e * (-2.0 * xi / q**2)
    return u, du


@dataclass(frozen=True)
class Kernel1D:
    kind: KernelKind
    radius: float
    dz: float
    weights: np.ndarray  # U(s_m), m = -M..M
    dweights: np.ndarray  # U'(s_m)
    norm_const: float  # U(s) = norm_const * profile(s/R)

    @property
    def half_count(self) -> int:
        return (self.weights.size - 1) // 2

    @property
    def offsets(self) -> np.ndarray:
        return self.dz * np.arange(-self.half_count, self.half_count + 1, dtype=float)

    @property
    def discrete_mass(self) -> float:
        return float(self.weights.sum() * self.dz)

    def __call__(self, s) -> np.ndarray:
        """Continuum kernel U(s) with the discrete normalization."""
        u, _ = _profile(self.kind, np.asarray(s, dtype=float) / self.radius)
        return self.norm_const * u


def build_kernel(kind, radius: float, grid: Grid1D) -> Kernel1D:
    """Sample the kernel on grid offsets and renormalize to unit discrete mass.

    The derivative samples are the analytic derivative of the same profile,
    rescaled so that the discrete first moment obeys -sum U'(s) s dz = 1,
    i.e. the derivative of the convolution of the identity field is exactly 1.
    """
    kind = KernelKind(kind)
    dz = grid.dz
    if radius < 2 * dz:
        raise ValidationError(
            f"kernel radius {radius} under-resolved: needs radius >= 2*dz = {2 * dz}"
        )
    m = int(np.floor(radius / dz * (1 + 1e-12)))
    s = dz * np.arange(-m, m + 1, dtype=float)
    u, du = _profile(kind, s / radius)
    # symmetrize explicitly so reflection identities hold bit for bit
    u = 0.5 * (u + u[::-1])
    du = 0.5 * (du - du[::-1]) / radius
    c = 1.0 / (u.sum() * dz)
    weights = c * u
    dweights = c * du
    first_moment = -np.sum(dweights * s) * dz
    dweights = dweights / first_moment
    weights.setflags(write=False)
    dweights.setflags(write=False)
    return Kernel1D(kind=kind, radius=float(radius), dz=dz, weights=weights, dweights=dweights,
                    norm_const=c)


# --------------------------------------------------------------------------
# fields and convolution


@dataclass(frozen=True)
class Extension:
    """Rule for values outside [-Z, Z]: 'zero', 'constant' (left, right) or
    'linear' (continue with the end slopes)."""

    kind: str = "zero"
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "linear"):
            raise ValidationError(f"unknown extension kind {self.kind!r}")


ZERO = Extension("zero")


@dataclass(frozen=True)
class ScalarField:
    values: np.ndarray
    extension: Extension = field(default=ZERO)

    @classmethod
    def constant_ext(cls, values, left: float, right: float) -> "ScalarField":
        return cls(np.asarray(values, dtype=float), Extension("constant", float(left), float(right)))

    @classmethod
    def zero_ext(cls, values) -> "ScalarField":
        return cls(np.asarray(values, dtype=float), ZERO)

    @classmethod
    def linear_ext(cls, values) -> "ScalarField":
        return cls(np.asarray(values, dtype=float), Extension("linear"))

    def padded(self, m: int) -> np.ndarray:
        return pad(self.values, m, self.extension)


def pad(values: np.ndarray, m: int, ext: Extension) -> np.ndarray:
    """Extend the last axis by m nodes on each side according to ``ext``."""
    v = np.asarray(values, dtype=float)
    shape = v.shape[:-1] + (m,)
    if ext.kind == "zero":
        left = np.zeros(shape)
        right = np.zeros(shape)
    elif ext.kind == "constant":
        left = np.full(shape, ext.left)
        right = np.full(shape, ext.right)
    else:
        k = np.arange(1, m + 1, dtype=float)
        sl = v[..., 1:2] - v[..., 0:1]
        sr = v[..., -1:] - v[..., -2:-1]
        left = v[..., 0:1] - sl * k[::-1]
        right = v[..., -1:] + sr * k
    return np.concatenate([left, v, right], axis=-1)


def _even_sum(weights: np.ndarray, p: np.ndarray, n: int) -> np.ndarray:
    # sum_m w_m p(k - m) with w even: pair +m and -m so that reflecting the
    # input reflects the output exactly
    m = (weights.size - 1) // 2
    out = weights[m] * p[..., m:m + n]
    for j in range(1, m + 1):
        out = out + weights[m + j] * (p[..., m - j:m - j + n] + p[..., m + j:m + j + n])
    return out


def _odd_sum(dweights: np.ndarray, p: np.ndarray, n: int) -> np.ndarray:
    m = (dweights.size - 1) // 2
    out = np.zeros(p.shape[:-1] + (n,))
    for j in range(1, m + 1):
        # U'(s_j) f(z - s_j) + U'(-s_j) f(z + s_j)
        out = out + dweights[m + j] * (p[..., m - j:m - j + n] - p[..., m + j:m + j + n])
    return out


def convolve_array(kernel: Kernel1D, values: np.ndarray, ext: Extension = ZERO) -> np.ndarray:
    """(U*f)(z_k) = sum_m U(s_m) f(z_k - s_m) dz over the last axis."""
    values = np.asarray(values, dtype=float)
    p = pad(values, kernel.half_count, ext)
    return _even_sum(kernel.weights * kernel.dz, p, values.shape[-1])


def convolve_derivative_array(kernel: Kernel1D, values: np.ndarray, ext: Extension = ZERO) -> np.ndarray:
    """d/dz (U*f) computed as (U')*f with the analytic kernel derivative."""
    values = np.asarray(values, dtype=float)
    p = pad(values, kernel.half_count, ext)
    return _odd_sum(kernel.dweights * kernel.dz, p, values.shape[-1])


def convolve(kernel: Kernel1D, f: ScalarField) -> ScalarField:
    out = convolve_array(kernel, f.values, f.extension)
    # U*const = const and the even kernel maps affine data to itself
    return ScalarField(out, f.extension)


def convolve_derivative(kernel: Kernel1D, f: ScalarField) -> ScalarField:
    out = convolve_derivative_array(kernel, f.values, f.extension)
    if f.extension.kind == "linear":
        sl = f.values[1] - f.values[0]
        sr = f.values[-1] - f.values[-2]
        return ScalarField(out, Extension("constant", sl / kernel.dz, sr / kernel.dz))
    return ScalarField(out, ZERO)


def convolution_matrix(kernel: Kernel1D, nz: int) -> np.ndarray:
    """Dense symmetric Toeplitz matrix T with (T f)_k = (U*f)(z_k) under zero extension."""
    from scipy.linalg import toeplitz

    m = kernel.half_count
    col = np.zeros(nz)
    k = min(m + 1, nz)
    col[:k] = kernel.weights[m:m + k] * kernel.dz
    return toeplitz(col)


def centered_gradient(f: np.ndarray, dz: float) -> np.ndarray:
    """Second-order centered differences with second-order one-sided ends."""
    return np.gradient(np.asarray(f, dtype=float), dz, edge_order=2, axis=-1)
