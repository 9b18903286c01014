import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import hermite_e

from vfpfront.errors import ValidationError
from vfpfront.model import build_grid, build_kernel
from vfpfront.spectral import (HermiteBasis, OperatorA, apply_A, aprime_ratio, build_A0tilde,
                               build_Atilde, check_lgap, dissipation_weights, fp_matrix_hermite,
                               kernel_symbol, lgap_ratio, predicted_null_vector,
                               probe_Aprime_bound, quadratic_form_identity, spectrum_Atilde,
                               symbol_spectrum_A0)
from vfpfront.thermo import coexistence_densities

BETA = 1.25


def velocity_quadrature(basis, nodes=80):
    """Gauss-Hermite rule for int F(v) M(v) dv with F polynomial in v."""
    xi, wq = hermite_e.hermegauss(nodes)
    return xi / math.sqrt(basis.beta), wq / math.sqrt(2 * math.pi)


# -- Hermite basis -----------------------------------------------------------

def test_orthonormality_by_quadrature():
    b = HermiteBasis(8, BETA)
    v, wq = velocity_quadrature(b)
    # phi_j phi_k / M = M He_j He_k / sqrt(j! k!)
    p = b.polynomials(math.sqrt(BETA) * v)
    gram = (p * wq) @ p.T
    np.testing.assert_allclose(gram, np.eye(b.size), atol=1e-12)


def test_mode0_is_maxwellian():
    b = HermiteBasis(4, BETA)
    v = np.linspace(-3, 3, 11)
    np.testing.assert_allclose(b.modes(v)[0], b.maxwellian(v), rtol=1e-15)
    # normalized with variance 1/beta
    vq, wq = velocity_quadrature(b)
    assert np.sum(wq * vq**2) == pytest.approx(1 / BETA, rel=1e-13)


def test_velocity_and_dv_matrices_by_quadrature():
    b = HermiteBasis(6, BETA)
    v = np.linspace(-10, 10, 20001)
    dv = v[1] - v[0]
    modes = b.modes(v)
    M = b.maxwellian(v)
    # coefficients of v phi_k and d/dv phi_k by projection with weight 1/M
    proj = lambda f: (f / M) @ modes.T * dv
    vm = np.array([proj(v * modes[k]) for k in range(b.size)]).T
    np.testing.assert_allclose(vm[:, :-1], b.velocity_matrix()[:, :-1], atol=1e-8)
    dm = np.array([proj(np.gradient(modes[k], dv)) for k in range(b.size)]).T
    np.testing.assert_allclose(dm[:, :-1], b.dv_matrix()[:, :-1], atol=1e-5)


def test_max_speed():
    b = HermiteBasis(16, BETA)
    roots = hermite_e.hermeroots([0] * 17 + [1])
    assert b.max_speed() == pytest.approx(roots.max() / math.sqrt(BETA), rel=1e-14)


def test_basis_validation():
    with pytest.raises(ValidationError):
        HermiteBasis(0, BETA)
    with pytest.raises(ValidationError):
        HermiteBasis(3, 0.0)


# -- Fokker-Planck -----------------------------------------------------------

def test_fp_matrix_small():
    np.testing.assert_array_equal(np.diag(fp_matrix_hermite(HermiteBasis(2, BETA))), [0.0, -1.25, -2.5])


def test_fp_matrix_is_fokker_planck_by_quadrature():
    # L phi_k = d/dv (M d/dv (phi_k / M)) equals -beta k phi_k pointwise
    b = HermiteBasis(5, BETA)
    v = np.linspace(-5, 5, 20001)
    dv = v[1] - v[0]
    M = b.maxwellian(v)
    for k, phi in enumerate(b.modes(v)):
        Lphi = np.gradient(M * np.gradient(phi / M, dv), dv)
        assert np.max(np.abs(Lphi[100:-100] + BETA * k * phi[100:-100])) < 1e-5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=7, max_size=7))
def test_fp_sign_definite(c):
    b = HermiteBasis(6, BETA)
    c = np.array(c)
    L = fp_matrix_hermite(b)
    assert c @ L @ c == pytest.approx(-BETA * np.sum(b.k * c**2), abs=1e-9)
    assert c @ L @ c <= 1e-12


def test_lgap_mode1_exact_and_by_quadrature():
    b = HermiteBasis(6, BETA)
    e1 = np.zeros(b.size)
    e1[1] = 1.0
    assert lgap_ratio(b, e1) == pytest.approx(BETA / (1 + 2 * BETA), abs=1e-12)
    # quadrature: ||g||_M^2 + ||d_v g||_M^2 for g = phi_1
    v = np.linspace(-8, 8, 40001)
    dv = v[1] - v[0]
    M = b.maxwellian(v)
    g = b.modes(v)[1]
    dnorm = np.sum(g**2 / M) * dv + np.sum(np.gradient(g, dv) ** 2 / M) * dv
    assert dnorm == pytest.approx(dissipation_weights(b)[1], rel=1e-6)
    assert BETA / dnorm == pytest.approx(BETA / (1 + 2 * BETA), rel=1e-6)


def test_lgap_mode0_skipped():
    b = HermiteBasis(4, BETA)
    assert lgap_ratio(b, np.array([1.0, 0, 0, 0, 0])) is None


def test_check_lgap_positive_and_reproducible():
    b = HermiteBasis(16, BETA)
    nu = check_lgap(b, 1000, rng=7)
    assert nu > 0
    assert nu == check_lgap(b, 1000, rng=7)
    # never below the mode-1 value: beta k / (1 + beta (k+1)) increases with k
    assert nu >= BETA / (1 + 2 * BETA) - 1e-15


# -- operator A ----------------------------------------------------------------

@pytest.fixture(scope="module")
def op(coarse_front):
    return OperatorA(coarse_front)


def test_A_symmetric_and_linear(op, rng):
    f, g = rng.standard_normal((2, 2, op.front.grid.nz))
    assert op.inner(f, op.apply(g)) == pytest.approx(op.inner(op.apply(f), g), rel=1e-12)
    np.testing.assert_allclose(apply_A(op, 2 * f - 3 * g), 2 * op.apply(f) - 3 * op.apply(g), atol=1e-12)


def test_A_tail_action(op):
    z = op.front.z
    u = np.exp(-0.5 * ((z - 8.0) / 0.5) ** 2)
    g = np.stack([op.front.w1 * u, np.zeros_like(z)])
    out = op.apply(g)
    np.testing.assert_allclose(out[0], u, atol=1e-13)
    # second component: beta U*(w1 u) with w1 ~ rho+ in the tail
    from vfpfront.model import convolve_array
    exact = op.beta * convolve_array(op.kernel, op.front.w1 * u)
    np.testing.assert_allclose(out[1], exact, atol=1e-14)
    ref = op.beta * op.front.rho_plus * convolve_array(op.kernel, u)
    tail_gap = float(np.max((op.front.rho_plus - op.front.w1)[z > 6]))
    assert np.max(np.abs(out[1] - ref)) <= op.beta * tail_gap


def test_A_null_vector_small(op):
    r = op.norm(op.apply(op.front.wp)) / op.norm(op.front.wp)
    assert r < 2e-3
    dn = op.discrete_null_vector()
    assert op.norm(op.apply(dn)) / op.norm(dn) < 1e-9


def test_quadratic_form_identity_null(op):
    chk = quadratic_form_identity(op, op.front.wp)
    assert chk.agree
    assert abs(chk.direct) < 1e-6 and abs(chk.measure) < 1e-6


def test_quadratic_form_identity_mixed(op, rng):
    z = op.front.z
    small = 0.1 * np.stack([np.exp(-(z - 1) ** 2), -np.exp(-(z + 1) ** 2)])
    g = rng.uniform(0.5, 2) * op.front.wp + small
    chk = quadratic_form_identity(op, g)
    assert chk.agree and chk.nonnegative
    assert chk.direct == pytest.approx(chk.measure, rel=1e-6)
    assert chk.direct > 0


def test_quadratic_form_exclusion_warning(op):
    z = op.front.z
    g = np.stack([np.exp(-0.5 * ((z - 10.0) / 0.3) ** 2), np.zeros_like(z)])
    with pytest.warns(UserWarning, match="excluded"):
        chk = quadratic_form_identity(op, g, floor=1e-3)
    assert chk.excluded_mass > 0.99


def test_quadratic_form_unknown_null(op):
    with pytest.raises(ValidationError):
        quadratic_form_identity(op, op.front.wp, null="other")


# -- Atilde and spectrum ----------------------------------------------------

def test_Atilde_symmetric_and_null_action(coarse_front):
    A = build_Atilde(coarse_front)
    assert np.max(np.abs(A - A.T)) < 1e-13
    u = predicted_null_vector(coarse_front)
    assert np.linalg.norm(A @ u) < 5e-3


def test_Atilde_constant_limit_rows(coarse_front):
    f = coarse_front
    nz = f.grid.nz
    A0 = build_A0tilde(f.beta, f.rho_plus, f.rho_minus, f.kernel, nz)
    A = build_Atilde(f)
    # far right: w1 ~ rho+, w2 ~ rho-, rows agree up to the tail error
    rows = slice(nz - 30, nz - 20)
    assert np.max(np.abs(A[rows] - A0[rows])) < 1e-6


def test_spectrum_reference(coarse_front):
    rep = spectrum_Atilde(build_Atilde(coarse_front), 4, predicted_null_vector(coarse_front))
    assert abs(rep.eigenvalues[0]) < 1e-8
    assert rep.null_alignment > 0.999
    assert rep.gap == pytest.approx(0.0886514, rel=1e-3)
    assert rep.max_pair_residual < 1e-10
    assert np.all(np.diff(rep.eigenvalues) >= 0)


def test_spectrum_shift_invert_matches_dense(coarse_front):
    A = build_Atilde(coarse_front)
    u = predicted_null_vector(coarse_front)
    d = spectrum_Atilde(A, 3, u)
    s = spectrum_Atilde(A, 3, u, method="shift-invert")
    np.testing.assert_allclose(s.eigenvalues, d.eigenvalues, atol=1e-9)


def test_spectrum_rejects_asymmetric():
    with pytest.raises(ValidationError):
        spectrum_Atilde(np.array([[1.0, 2.0], [0.0, 1.0]]), 1)


def test_no_gap_without_alignment():
    rep = spectrum_Atilde(np.diag([1.0, 2.0, 3.0]), 2, np.array([0.0, 1.0, 0.0]))
    assert rep.gap is None


def test_subcritical_constant_state_spectrum():
    grid = build_grid(12.0, 129)
    k = build_kernel("biweight", 1.0, grid)
    beta = 0.8
    A0 = build_A0tilde(beta, 1.0, 1.0, k, grid.nz)
    rep = spectrum_Atilde(A0, 1)
    sym = symbol_spectrum_A0(beta, 1.0, 1.0, k)
    assert rep.eigenvalues[0] > sym.gap_edge - 1e-12
    assert rep.eigenvalues[0] == pytest.approx(sym.gap_edge, abs=2e-3)


def test_symbol_properties():
    grid = build_grid(12.0, 1025)
    c = coexistence_densities(BETA, 2.0)
    for kind in ("biweight", "bump"):
        k = build_kernel(kind, 1.0, grid)
        xi, uhat = kernel_symbol(k)
        assert uhat[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(uhat)) <= uhat[0] + 1e-15
        sym = symbol_spectrum_A0(BETA, c.rho_plus, c.rho_minus, k)
        assert sym.gap_edge == pytest.approx(1 - BETA * math.sqrt(c.rho_plus * c.rho_minus), abs=1e-12)
        assert sym.gap_edge > 0
        assert sym.lower == pytest.approx(sym.gap_edge, abs=1e-12)


def test_symbol_critical_edge():
    grid = build_grid(12.0, 513)
    k = build_kernel("biweight", 1.0, grid)
    assert symbol_spectrum_A0(1.0, 1.0, 1.0, k).gap_edge == pytest.approx(0.0, abs=1e-12)
    assert symbol_spectrum_A0(0.5, 1.0, 1.0, k).gap_edge == pytest.approx(0.5, abs=1e-12)


# -- A' probe -------------------------------------------------------------------

def test_aprime_partner_and_rejection(op):
    wt = np.stack([op.front.wp[0], -op.front.wp[1]])
    r = aprime_ratio(op, wt)
    assert r is not None and 0 < r < np.inf
    with pytest.raises(ValidationError, match="orthogonal"):
        aprime_ratio(op, op.front.wp)


def test_aprime_probe_positive_and_seeded(op):
    p1 = probe_Aprime_bound(op, 40, rng=3)
    p2 = probe_Aprime_bound(op, 40, rng=3)
    assert p1.minimum > 0
    assert p1.minimum == p2.minimum
    assert p1.ratios.size + p1.skipped == 40
