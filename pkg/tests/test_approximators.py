import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpsim import kernels
from dpsim.approximators import (DEFAULT_INPUT_RANGES, AdaptiveWeights,
                                 GridCapacityError, RbfNetwork, build_grid_centers,
                                 gaussian_basis, rbf_output, write_weight_csv)

INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class TestGrid:
    def test_two_dim_corners(self):
        centers = build_grid_centers([(0.0, 1.0), (0.0, 1.0)], 2)
        assert {tuple(row) for row in centers} == {(0, 0), (0, 1), (1, 0), (1, 1)}

    def test_full_nine_dim_count(self):
        centers = build_grid_centers(DEFAULT_INPUT_RANGES, 3)
        assert centers.shape == (19683, 9)

    def test_endpoint_spacing(self):
        # arithmetic oracle: midpoint of [-2, 10] is 4
        centers = build_grid_centers([(-2.0, 10.0)], 3)
        np.testing.assert_array_equal(centers.ravel(), [-2.0, 4.0, 10.0])

    def test_capacity_ceiling(self):
        with pytest.raises(GridCapacityError):
            build_grid_centers(DEFAULT_INPUT_RANGES, 5)  # 5^9 > 1e6

    def test_lexicographic_and_stable(self):
        centers = build_grid_centers([(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)], 3)
        as_tuples = [tuple(r) for r in centers]
        assert as_tuples == sorted(as_tuples)
        again = build_grid_centers([(0.0, 1.0), (0.0, 2.0), (0.0, 3.0)], 3)
        np.testing.assert_array_equal(centers, again)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            build_grid_centers([(1.0, 1.0)], 3)
        with pytest.raises(ValueError):
            build_grid_centers([(0.0, 1.0)], 1)


class TestBasis:
    def test_value_at_center(self):
        net = RbfNetwork(np.zeros((1, 2)), np.array([1.0]))
        g = gaussian_basis(net, np.zeros(2))
        assert g[0] == pytest.approx(INV_SQRT_2PI, abs=1e-9)
        assert g[0] == pytest.approx(0.3989423, abs=1e-6)

    def test_unit_distance_value(self):
        net = RbfNetwork(np.zeros((1, 1)), np.array([1.0]))
        g = gaussian_basis(net, np.array([1.0]))
        assert g[0] == pytest.approx(INV_SQRT_2PI * np.exp(-0.5), abs=1e-9)
        assert g[0] == pytest.approx(0.2419707, abs=1e-6)

    def test_monotone_tail(self):
        net = RbfNetwork(np.zeros((1, 1)), np.array([1.0]))
        values = [gaussian_basis(net, np.array([d]))[0] for d in (0.0, 1.0, 2.0, 5.0, 10.0)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] >= 0.0

    def test_dimension_check(self):
        net = RbfNetwork(np.zeros((4, 3)), np.ones(4))
        with pytest.raises(ValueError):
            gaussian_basis(net, np.zeros(2))

    @given(st.lists(st.floats(-5.0, 5.0), min_size=2, max_size=2))
    def test_positive_and_bounded(self, z):
        net = RbfNetwork(np.array([[0.0, 0.0], [1.0, -1.0], [2.0, 2.0]]),
                         np.array([1.0, 0.5, 2.0]))
        g = gaussian_basis(net, np.array(z))
        assert (g > 0).all()
        assert (g <= 1.0 / (np.sqrt(2 * np.pi) * net.widths) + 1e-15).all()

    def test_width_validation(self):
        with pytest.raises(ValueError):
            RbfNetwork(np.zeros((1, 1)), np.array([0.0]))


class TestRbfOutput:
    def test_zero_weights(self):
        net = RbfNetwork.grid(ranges=[(-1, 1)] * 3, points_per_dim=2)
        np.testing.assert_array_equal(
            rbf_output(net, AdaptiveWeights.zeros(net.node_count), np.zeros(3)), np.zeros(3))

    def test_single_node_closed_form(self):
        z = np.array([0.3, -0.2, 0.1])
        net = RbfNetwork(z[None, :], np.array([1.0]))
        weights = AdaptiveWeights(np.array([[2.0], [-1.0], [0.5]]))
        np.testing.assert_allclose(rbf_output(net, weights, z),
                                   INV_SQRT_2PI * np.array([2.0, -1.0, 0.5]), rtol=1e-12)

    def test_linear_in_weights(self):
        net = RbfNetwork.grid(ranges=[(-1, 1)] * 2, points_per_dim=3)
        rng = np.random.default_rng(5)
        weights = AdaptiveWeights(rng.normal(size=(3, net.node_count)))
        z = np.array([0.2, 0.4])
        doubled = AdaptiveWeights(2.0 * weights.theta)
        np.testing.assert_allclose(rbf_output(net, doubled, z),
                                   2.0 * rbf_output(net, weights, z), rtol=1e-12)

    def test_dimension_mismatch(self):
        net = RbfNetwork.grid(ranges=[(-1, 1)] * 2, points_per_dim=2)
        with pytest.raises(ValueError):
            rbf_output(net, AdaptiveWeights.zeros(net.node_count + 1), np.zeros(2))

    def test_lipschitz_on_box(self):
        # slope bound: |grad g_j| <= coef_j * exp(-1/2) / h_j per node
        net = RbfNetwork(np.array([[0.0, 0.5], [-1.0, 1.0], [2.0, -2.0]]),
                         np.array([1.0, 0.8, 1.5]))
        rng = np.random.default_rng(11)
        weights = AdaptiveWeights(rng.normal(size=(3, 3)))
        lip = np.abs(weights.theta) @ (net._coef * np.exp(-0.5) / net.widths)
        for _ in range(200):
            za, zb = rng.uniform(-3, 3, size=(2, 2))
            diff = np.abs(rbf_output(net, weights, za) - rbf_output(net, weights, zb))
            assert (diff <= lip * np.linalg.norm(za - zb) * (1 + 1e-9) + 1e-12).all()


class TestUniversalApproximation:
    def test_least_squares_fit_of_smooth_surface(self):
        # oracle: direct least squares on a 5x5 grid approximating sin(x)cos(y)
        net = RbfNetwork.grid(ranges=[(-1, 1), (-1, 1)], points_per_dim=5, width=0.7)
        train = np.stack(np.meshgrid(np.linspace(-1, 1, 21), np.linspace(-1, 1, 21),
                                     indexing="ij"), -1).reshape(-1, 2)
        basis = np.stack([gaussian_basis(net, z) for z in train])
        target = np.sin(train[:, 0]) * np.cos(train[:, 1])
        coeffs, *_ = np.linalg.lstsq(basis, target, rcond=None)
        test = np.stack(np.meshgrid(np.linspace(-1, 1, 41), np.linspace(-1, 1, 41),
                                    indexing="ij"), -1).reshape(-1, 2)
        fitted = np.stack([gaussian_basis(net, z) for z in test]) @ coeffs
        max_err = np.abs(fitted - np.sin(test[:, 0]) * np.cos(test[:, 1])).max()
        assert max_err < 0.05


class TestWeights:
    def test_random_init_range_and_determinism(self):
        a = AdaptiveWeights.random_init(100, seed=7)
        b = AdaptiveWeights.random_init(100, seed=7)
        np.testing.assert_array_equal(a.theta, b.theta)
        assert ((a.theta >= 0) & (a.theta < 1)).all()

    def test_norms(self):
        w = AdaptiveWeights(np.array([[3.0, 4.0], [0.0, 0.0], [1.0, 0.0]]))
        np.testing.assert_allclose(w.norms(), [5.0, 0.0, 1.0])

    def test_csv_export(self, tmp_path):
        w = AdaptiveWeights(np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
        path = tmp_path / "weights.csv"
        write_weight_csv(path, w)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "node_index,theta1,theta2,theta3"
        assert lines[1] == "0,1,3,5"
        assert len(lines) == 3


@pytest.mark.skipif("numba" not in kernels.available_backends(),
                    reason="numba backend unavailable")
class TestBackends:
    def test_paths_agree(self):
        net = RbfNetwork.grid(ranges=[(-1, 2)] * 4, points_per_dim=3, width=0.8)
        rng = np.random.default_rng(0)
        z = rng.normal(size=4)
        theta = np.ascontiguousarray(rng.random((3, net.node_count)))
        z2 = rng.normal(size=3)
        gamma = np.full((3, net.node_count), 0.3)
        sigma = np.array([1.0, 2.0, 0.5])
        results = {}
        previous = kernels.active_backend()
        try:
            for name in kernels.available_backends():
                kernels.use_backend(name)
                g = np.empty(net.node_count)
                tdot = np.empty_like(theta)
                nn = kernels.adaptive_core(net.centers, net._inv_two_h2, net._coef, z,
                                           theta, z2, gamma, sigma, -1.0, -1.0, g, tdot)
                results[name] = (g, nn, tdot)
        finally:
            kernels.use_backend(previous)
        g_a, nn_a, td_a = results["numba"]
        g_b, nn_b, td_b = results["numpy"]
        np.testing.assert_allclose(g_a, g_b, rtol=1e-12)
        np.testing.assert_allclose(nn_a, nn_b, rtol=1e-12)
        np.testing.assert_allclose(td_a, td_b, rtol=1e-12)

    def test_unknown_backend_rejected(self):
        with pytest.raises(ValueError):
            kernels.use_backend("fortran")
