import numpy as np
import pytest

from conftest import dense_periodic_gradient
from proxflow.operators import DenseMap, DimensionError, GradientOperator, GridShape, IdentityMap, laplacian_spectrum

SHAPES = [(3,), (7,), (2, 2), (3, 5), (4, 4), (2, 3, 2), (3, 3, 3)]


class TestGridShape:
    def test_size_and_ndim(self):
        g = GridShape((3, 4))
        assert g.size == 12 and g.ndim == 2

    @pytest.mark.parametrize("dims", [(), (1,), (4, 1), (2, 2, 2, 2)])
    def test_rejects_degenerate(self, dims):
        with pytest.raises(ValueError):
            GridShape(dims)


class TestGradient:
    def test_constant_image_maps_to_zero(self):
        K = GradientOperator((4, 5))
        assert np.array_equal(K.apply(np.full(20, 3.7)), np.zeros(40))

    def test_1d_values(self):
        K = GradientOperator((3,))
        assert np.allclose(K.apply([1.0, 2.0, 4.0]), [1.0, 2.0, -3.0])

    def test_2d_groups(self):
        a, b, c, d = 1.0, 2.0, 5.0, 11.0
        g = GradientOperator((2, 2)).apply([a, b, c, d]).reshape(4, 2)
        expected = [[b - a, c - a], [a - b, d - b], [d - c, a - c], [c - d, b - d]]
        assert np.allclose(g, expected)

    def test_adjoint_of_1d_gradient_is_circulant_laplacian(self):
        K = GradientOperator((3,))
        x = np.array([1.0, 2.0, 4.0])
        lap = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], dtype=float)
        assert np.allclose(K.adjoint(K.apply(x)), lap @ x)
        assert np.allclose(K.adjoint(K.apply(x)), [-4.0, -1.0, 5.0])

    def test_adjoint_of_zero(self):
        assert np.array_equal(GradientOperator((3, 3)).adjoint(np.zeros(18)), np.zeros(9))

    @pytest.mark.parametrize("dims", SHAPES)
    def test_adjoint_identity(self, dims, rng):
        K = GradientOperator(dims)
        r, n = K.shape
        for _ in range(100):
            x, g = rng.standard_normal(n), rng.standard_normal(r)
            lhs, rhs = K.apply(x) @ g, x @ K.adjoint(g)
            assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))

    @pytest.mark.parametrize("dims", SHAPES)
    def test_matches_index_built_matrix(self, dims, rng):
        K = GradientOperator(dims)
        M = dense_periodic_gradient(dims)
        assert np.abs(K.as_dense() - M).max() == 0.0
        x, g = rng.standard_normal(K.shape[1]), rng.standard_normal(K.shape[0])
        assert np.abs(K.apply(x) - M @ x).max() <= 1e-14
        assert np.abs(K.adjoint(g) - M.T @ g).max() <= 1e-14

    def test_shape_mismatch(self):
        K = GradientOperator((3, 3))
        with pytest.raises(DimensionError):
            K.apply(np.zeros(8))
        with pytest.raises(DimensionError):
            K.adjoint(np.zeros(9))


class TestLaplacianSpectrum:
    def test_2x2_multiset(self):
        assert np.allclose(np.sort(laplacian_spectrum((2, 2))), [0, 4, 4, 8])

    def test_1d_formula(self):
        L = 9
        k = np.arange(L)
        assert np.allclose(laplacian_spectrum((L,)), 2 - 2 * np.cos(2 * np.pi * k / L))

    @pytest.mark.parametrize("dims", SHAPES)
    def test_bounds_and_single_zero(self, dims):
        lam = laplacian_spectrum(dims)
        assert lam.min() == 0.0
        assert np.count_nonzero(np.abs(lam) < 1e-12) == 1
        assert lam.max() <= 4 * len(dims) + 1e-12

    @pytest.mark.parametrize("dims", SHAPES)
    def test_matches_dense_eigenvalues(self, dims):
        M = dense_periodic_gradient(dims)
        dense = np.linalg.eigvalsh(M.T @ M)
        assert np.allclose(np.sort(laplacian_spectrum(dims)), dense, atol=1e-10)

    @pytest.mark.parametrize("dims", [(5,), (3, 4), (2, 3, 4)])
    def test_dft_ordering(self, dims, rng):
        # The Laplacian acts as multiplication by the spectrum in DFT coordinates.
        x = rng.standard_normal(int(np.prod(dims)))
        K = GradientOperator(dims)
        lhs = np.fft.fftn(K.adjoint(K.apply(x)).reshape(dims)).ravel()
        rhs = laplacian_spectrum(dims) * np.fft.fftn(x.reshape(dims)).ravel()
        assert np.allclose(lhs, rhs, atol=1e-10)


class TestDenseAndIdentity:
    def test_dense_map(self, rng):
        M = rng.standard_normal((4, 6))
        A = DenseMap(M)
        x, y = rng.standard_normal(6), rng.standard_normal(4)
        assert A.shape == (4, 6)
        assert np.allclose(A.apply(x), M @ x)
        assert np.allclose(A.adjoint(y), M.T @ y)
        with pytest.raises(DimensionError):
            A.apply(y)

    def test_dense_map_rejects_nan(self):
        with pytest.raises(ValueError):
            DenseMap(np.array([[1.0, np.nan]]))

    def test_identity(self, rng):
        x = rng.standard_normal(5)
        I = IdentityMap(5)
        assert np.array_equal(I.apply(x), x) and np.array_equal(I.adjoint(x), x)
        assert np.array_equal(I.as_dense(), np.eye(5))
