import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apnet.errors import GraphError
from apnet.graph import (build_graph, complete_graph, f_matrix_min_eig, grid_graph, is_connected,
                         laplacian, laplacian_pseudoinverse, path_graph, random_connected_graph,
                         spectrum)


def char_poly(m):
    """Characteristic polynomial coefficients by Faddeev-LeVerrier (no eigensolver)."""
    n = m.shape[0]
    coeffs = [1.0]
    mk = np.zeros_like(m)
    for k in range(1, n + 1):
        mk = m @ mk + coeffs[-1] * np.eye(n)
        coeffs.append(-np.trace(m @ mk) / k)
    return np.array(coeffs)


@st.composite
def connected_graphs(draw, n_max=12):
    n = draw(st.integers(2, n_max))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    p = draw(st.floats(0.0, 0.8))
    return random_connected_graph(n, np.random.default_rng(seed), p=p)


class TestBuildGraph:
    def test_edges_normalized_and_sorted(self):
        g = build_graph(3, [(2, 1), (1, 0)])
        assert g.edges == ((0, 1), (1, 2))
        assert g.neighbors(1) == (0, 2)

    @pytest.mark.parametrize("edges,msg", [
        ([(0, 0)], "self-loop"),
        ([(0, 3)], "outside"),
        ([(0, 1), (1, 0)], "duplicate"),
        ([(0, 1, 2)], "pair"),
    ])
    def test_rejects_bad_edges(self, edges, msg):
        with pytest.raises(GraphError, match=msg):
            build_graph(3, edges)

    def test_rejects_nonpositive_n(self):
        with pytest.raises(GraphError):
            build_graph(0, [])

    def test_graph_error_is_value_error(self):
        with pytest.raises(ValueError):
            build_graph(2, [(0, 0)])

    def test_cached_arrays_read_only(self):
        g = path_graph(3)
        with pytest.raises(ValueError):
            g.laplacian[0, 0] = 5.0


class TestLaplacian:
    def test_path_of_three(self):
        expected = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
        np.testing.assert_array_equal(laplacian(path_graph(3)), expected)

    def test_triangle(self):
        expected = np.array([[2, -1, -1], [-1, 2, -1], [-1, -1, 2]], dtype=float)
        np.testing.assert_array_equal(laplacian(complete_graph(3)), expected)

    def test_grid_degrees(self):
        g = grid_graph(3, 3)
        assert g.degrees.tolist() == [2, 3, 2, 3, 4, 3, 2, 3, 2]
        assert len(g.edges) == 12


class TestConnectivity:
    def test_examples(self):
        assert is_connected(path_graph(4))
        assert not is_connected(build_graph(3, [(0, 1)]))
        assert is_connected(build_graph(1, []))

    def test_disconnected_pinv_rejected(self):
        g = build_graph(4, [(0, 1), (2, 3)])
        with pytest.raises(GraphError):
            laplacian_pseudoinverse(g.laplacian, g)

    @settings(max_examples=60, deadline=None)
    @given(n=st.integers(2, 10), seed=st.integers(0, 2 ** 32 - 1), p=st.floats(0.0, 0.6))
    def test_bfs_matches_spectral_gap(self, n, seed, p):
        rng = np.random.default_rng(seed)
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p]
        g = build_graph(n, edges)
        assert is_connected(g) == (spectrum(g.laplacian).eigenvalues[1] > 1e-10)


class TestSpectrum:
    def test_path_of_three_against_characteristic_polynomial(self):
        lap = laplacian(path_graph(3))
        coeffs = char_poly(lap)
        np.testing.assert_allclose(coeffs, [1, -4, 3, 0], atol=1e-12)
        np.testing.assert_allclose(spectrum(lap).eigenvalues, [0, 1, 3], atol=1e-12)

    def test_triangle(self):
        np.testing.assert_allclose(spectrum(laplacian(complete_graph(3))).eigenvalues, [0, 3, 3],
                                   atol=1e-12)

    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            spectrum([[0.0, 1.0], [0.0, 0.0]])

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError):
            spectrum(np.zeros((2, 3)))

    def test_shift_moves_eigenvalues(self):
        lap = laplacian(path_graph(4))
        base = spectrum(lap).eigenvalues
        np.testing.assert_allclose(spectrum(lap + 2.5 * np.eye(4)).eigenvalues, base + 2.5, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(g=connected_graphs())
    def test_eigenvalues_are_roots_of_char_poly(self, g):
        vals = spectrum(g.laplacian).eigenvalues
        poly = char_poly(g.laplacian)
        scale = np.polyval(np.abs(poly), vals.max())
        assert np.all(np.abs(np.polyval(poly, vals)) <= 1e-8 * scale)


class TestPseudoinverse:
    def test_single_edge(self):
        g = path_graph(2)
        np.testing.assert_allclose(g.pinv, [[0.25, -0.25], [-0.25, 0.25]], atol=1e-15)

    def test_single_node_is_zero(self):
        g = build_graph(1, [])
        np.testing.assert_array_equal(g.pinv, [[0.0]])

    @settings(max_examples=60, deadline=None)
    @given(g=connected_graphs())
    def test_identity_and_symmetry(self, g):
        n = g.n
        p = g.pinv
        np.testing.assert_allclose(g.laplacian @ p, np.eye(n) - np.ones((n, n)) / n, atol=1e-8)
        np.testing.assert_allclose(p, p.T, atol=1e-12)
        np.testing.assert_allclose(p @ np.ones(n), 0.0, atol=1e-9)


class TestLaplacianProperties:
    @settings(max_examples=60, deadline=None)
    @given(g=connected_graphs())
    def test_kernel_is_ones(self, g):
        sd = spectrum(g.laplacian)
        assert not np.any(g.laplacian.sum(axis=1))
        assert sd.eigenvalues[0] <= 1e-10 < sd.eigenvalues[1]
        v = sd.eigenvectors[:, 0]
        assert abs(abs(v.sum()) / np.sqrt(g.n) - 1) < 1e-10

    @settings(max_examples=60, deadline=None)
    @given(g=connected_graphs(), data=st.data())
    def test_single_positive_weight_makes_definite(self, g, data):
        i = data.draw(st.integers(0, g.n - 1))
        k = np.zeros(g.n)
        k[i] = data.draw(st.floats(0.01, 1.0))
        assert f_matrix_min_eig(g.laplacian, k) > 0


class TestFMatrix:
    def test_two_nodes_one_weight(self):
        # det([[2 - l, -1], [-1, 1 - l]]) = l^2 - 3l + 1
        expected = (3 - np.sqrt(5)) / 2
        assert f_matrix_min_eig(laplacian(path_graph(2)), np.diag([1.0, 0.0])) == pytest.approx(expected, abs=1e-14)

    def test_vector_and_matrix_forms_agree(self):
        lap = laplacian(path_graph(3))
        assert f_matrix_min_eig(lap, [0.5, 0, 0]) == f_matrix_min_eig(lap, np.diag([0.5, 0, 0]))

    def test_zero_weight_gives_zero(self):
        assert abs(f_matrix_min_eig(laplacian(path_graph(3)), np.zeros(3))) < 1e-12

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            f_matrix_min_eig(laplacian(path_graph(2)), [-1.0, 0.0])


class TestRandomGraph:
    @pytest.mark.parametrize("n", [1, 2, 5, 12])
    def test_always_connected(self, n, rng):
        for _ in range(20):
            assert is_connected(random_connected_graph(n, rng, p=0.0))

    def test_reproducible(self):
        a = random_connected_graph(8, np.random.default_rng(7))
        b = random_connected_graph(8, np.random.default_rng(7))
        assert a == b
