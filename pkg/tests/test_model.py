import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vfpfront.errors import ValidationError
from vfpfront.model import (Extension, KernelKind, ModelParams, ScalarField, build_grid,
                            build_kernel, centered_gradient, convolution_matrix, convolve,
                            convolve_array, convolve_derivative, convolve_derivative_array)


def test_smallest_grid():
    g = build_grid(1.0, 3)
    np.testing.assert_array_equal(g.z, [-1.0, 0.0, 1.0])
    assert g.dz == 1.0


def test_default_grid_midpoint_and_mirror():
    g = build_grid(12.0, 1025)
    assert g.z[512] == 0.0
    assert g.dz == 2 * 12.0 / 1024
    np.testing.assert_array_equal(g.z, -g.z[::-1])
    assert g.center == 512


def test_even_grid_rejected():
    with pytest.raises(ValidationError, match="odd"):
        build_grid(12.0, 1024)


def test_params_validation():
    ModelParams().validate()
    with pytest.raises(ValidationError, match="half_width"):
        ModelParams(half_width=5.0).validate()
    with pytest.raises(ValidationError, match="odd"):
        ModelParams(nz=1024).validate()
    with pytest.raises(ValidationError):
        ModelParams(beta=-1.0).validate()
    assert ModelParams().supercritical
    assert not ModelParams(beta=1.0).supercritical
    assert ModelParams().dz == pytest.approx(24 / 1024)


def test_biweight_normalization_constant():
    # continuum: int (1 - s^2)^2 ds over [-1, 1] = 16/15
    errs = []
    for nz in (257, 1025):
        k = build_kernel("biweight", 1.0, build_grid(12.0, nz))
        errs.append(abs(k.norm_const - 15 / 16))
    assert errs[1] < 1e-4
    assert errs[1] < errs[0] / 10


@pytest.mark.parametrize("kind", list(KernelKind))
def test_kernel_mass_support_symmetry(kind):
    grid = build_grid(12.0, 513)
    k = build_kernel(kind, 1.0, grid)
    assert k.discrete_mass == pytest.approx(1.0, abs=1e-14)
    assert np.all(k.weights >= 0)
    np.testing.assert_array_equal(k.weights, k.weights[::-1])
    np.testing.assert_array_equal(k.dweights, -k.dweights[::-1])
    assert np.all(np.abs(k.offsets) <= 1.0 + 1e-12)
    assert k(np.array([1.0, -1.0, 1.5]))[0] == 0.0
    assert k(np.array([1.5]))[0] == 0.0


def test_kernel_edge_weight_vanishes():
    # R/dz integer: the outermost samples sit exactly at +-R
    grid = build_grid(12.8, 257)
    k = build_kernel("biweight", 1.0, grid)
    assert k.weights[0] == 0.0 and k.weights[-1] == 0.0


def test_under_resolved_kernel_rejected():
    with pytest.raises(ValidationError, match="under-resolved"):
        build_kernel("biweight", 0.1, build_grid(12.0, 129))


@pytest.fixture(scope="module")
def kern():
    grid = build_grid(12.0, 513)
    return grid, build_kernel("biweight", 1.0, grid)


def test_convolve_constant(kern):
    grid, k = kern
    f = ScalarField.constant_ext(np.full(grid.nz, 3.5), 3.5, 3.5)
    np.testing.assert_allclose(convolve(k, f).values, 3.5, rtol=1e-14)
    np.testing.assert_allclose(convolve_derivative(k, f).values, 0.0, atol=1e-13)


def test_convolve_linear(kern):
    grid, k = kern
    f = ScalarField.linear_ext(grid.z.copy())
    out = convolve(k, f)
    np.testing.assert_allclose(out.values, grid.z, atol=1e-12)
    d = convolve_derivative(k, f)
    np.testing.assert_allclose(d.values, 1.0, atol=1e-12)
    assert d.extension.kind == "constant"


def test_convolve_half_indicator():
    for nz in (257, 1025):
        grid = build_grid(12.0, nz)
        k = build_kernel("biweight", 1.0, grid)
        ind = (grid.z >= 0).astype(float)
        # a full node value at the jump adds exactly half the central weight
        raw = convolve_array(k, ind)[grid.center]
        assert raw - 0.5 == pytest.approx(0.5 * k.weights[k.half_count] * grid.dz, abs=1e-14)
        # trapezoid convention (value 1/2 at the jump) gives the half mass exactly
        ind[grid.center] = 0.5
        assert convolve_array(k, ind)[grid.center] == pytest.approx(0.5, abs=1e-14)


def test_convolve_derivative_matches_finite_difference(kern):
    grid, k = kern
    f = np.sin(0.7 * grid.z) * np.exp(-0.02 * grid.z**2)
    d = convolve_derivative_array(k, f)
    fd = centered_gradient(convolve_array(k, f), grid.dz)
    inner = slice(50, -50)
    assert np.max(np.abs(d[inner] - fd[inner])) < 5 * grid.dz**2


def test_convolution_matrix_matches(kern, rng):
    grid, k = kern
    f = rng.standard_normal(grid.nz)
    T = convolution_matrix(k, grid.nz)
    np.testing.assert_allclose(T @ f, convolve_array(k, f), atol=1e-13)
    np.testing.assert_array_equal(T, T.T)


def test_batch_axes(kern, rng):
    grid, k = kern
    f = rng.standard_normal((2, 3, grid.nz))
    out = convolve_array(k, f)
    np.testing.assert_allclose(out[1, 2], convolve_array(k, f[1, 2]), rtol=0, atol=0)


def test_extension_kind_checked():
    with pytest.raises(ValidationError):
        Extension("periodic")


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=129, max_size=129))
def test_reflection_commutes_exactly(values):
    grid = build_grid(12.0, 129)
    k = build_kernel("biweight", 1.0, grid)
    f = np.array(values)
    np.testing.assert_array_equal(convolve_array(k, f[::-1]), convolve_array(k, f)[::-1])
    np.testing.assert_array_equal(convolve_derivative_array(k, f[::-1]),
                                  -convolve_derivative_array(k, f)[::-1])
