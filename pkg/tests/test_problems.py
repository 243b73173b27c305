import numpy as np
import pytest

from nsopt.problems import (DEFAULT_POLICY, CapabilityError, KinkPolicy,
                            L1CenterProblem, MaxAffineProblem, finite_diff,
                            load_dataset_csv, make_problem)


def clear_point(problem, rng, margin=1e-3):
    while True:
        i = int(rng.integers(problem.N))
        x = rng.normal(size=problem.n) * 1.5
        if problem.kink_margin(i, x) > margin:
            return i, x


class TestL1Center:
    def test_catalog_defaults(self):
        p = make_problem("l1_center")
        assert (p.N, p.n) == (5, 10)

    def test_value_and_subgrad(self):
        p = L1CenterProblem([[1.0, -2.0]])
        x = np.array([3.0, -2.0])
        assert p.value(0, x) == 2.0
        assert np.array_equal(p.subgrad(0, x), np.array([1.0, 0.0]))

    def test_abs_at_zero_policy(self):
        p = L1CenterProblem([[1.0, -2.0]])
        g = p.subgrad(0, np.array([1.0, 0.0]), KinkPolicy(abs_at_zero=-0.7))
        assert np.array_equal(g, np.array([-0.7, 1.0]))

    def test_gap_zero_at_median(self):
        p = make_problem("l1_center")
        assert p.gap(np.median(p.centers, axis=0)) == 0.0

    def test_gap_uses_kink_interval(self):
        # one coordinate within kink_tol of a center contributes the full
        # subdifferential interval, which absorbs the other signs here
        p = L1CenterProblem([[0.0], [1.0], [2.0]], kink_tol=1e-3)
        assert p.gap(np.array([1.0005])) == 0.0
        assert p.gap(np.array([1.1])) > 0.0

    def test_batched_value_matches_scalar(self):
        p = make_problem("l1_center")
        xs = np.random.default_rng(1).normal(size=(6, p.n))
        batched = p.value(2, xs)
        singles = np.array([p.value(2, x) for x in xs])
        assert np.array_equal(batched, singles)


class TestMaxAffine:
    def test_default_is_planar_inf_norm(self):
        p = make_problem("max_affine")
        x = np.array([0.3, -0.8])
        assert p.value(0, x) == 0.8
        assert np.array_equal(p.subgrad(0, x), np.array([0.0, -1.0]))

    def test_tie_policies(self):
        p = make_problem("max_affine")
        origin = np.zeros(2)
        first = p.subgrad(0, origin, KinkPolicy(max_tie="first"))
        assert np.array_equal(first, np.array([1.0, 0.0]))
        mean = p.subgrad(0, origin, KinkPolicy(max_tie="mean"))
        assert np.array_equal(mean, np.zeros(2))

    def test_kink_margin_is_score_spread(self):
        p = make_problem("max_affine")
        assert p.kink_margin(0, np.array([0.5, 0.1])) == pytest.approx(0.4)

    def test_gap_zero_at_origin(self):
        p = make_problem("max_affine")
        assert p.gap(np.zeros(2)) == 0.0
        assert p.gap(np.array([0.5, 0.0])) > 0.0


class TestSpurious:
    def test_value_is_identity(self):
        p = make_problem("spurious")
        assert p.value(0, np.array([-1.7])) == pytest.approx(-1.7)

    def test_selection_vanishes_at_zero_only(self):
        p = make_problem("spurious")
        assert p.subgrad(0, np.array([0.0]))[0] == 0.0
        assert p.subgrad(0, np.array([1e-12]))[0] == 1.0
        assert p.subgrad(0, np.array([-5.0]))[0] == 1.0

    def test_relu_at_zero_moves_the_selection(self):
        p = make_problem("spurious")
        g = p.subgrad(0, np.array([0.0]), KinkPolicy(relu_at_zero=0.5))
        assert g[0] == 1.0

    def test_gap(self):
        p = make_problem("spurious")
        assert p.gap(np.array([0.0])) == 0.0
        assert p.gap(np.array([1e-9])) == 1.0


class TestReluMlp:
    def test_catalog_shape(self):
        p = make_problem("relu_mlp")
        assert p.n == 82 and p.N == 256  # widths 2-16-2 plus biases

    def test_batched_subgrad_matches_scalar(self):
        p = make_problem("relu_mlp")
        rng = np.random.default_rng(2)
        xs = np.stack([rng.normal(size=p.n) for _ in range(5)])
        idx = rng.integers(p.N, size=5)
        batched = p.subgrad(idx, xs)
        singles = np.stack([p.subgrad(int(i), x) for i, x in zip(idx, xs)])
        assert np.array_equal(batched, singles)

    def test_mean_subgrad_is_component_average(self):
        p = make_problem("relu_mlp", samples=16)
        x = np.random.default_rng(3).normal(size=p.n)
        mean = p.mean_subgrad(x)
        manual = np.mean([p.subgrad(i, x) for i in range(p.N)], axis=0)
        assert np.allclose(mean, manual, rtol=0.0, atol=1e-15)

    def test_gap_not_available(self):
        p = make_problem("relu_mlp")
        assert not p.has_gap
        with pytest.raises(CapabilityError):
            p.gap(np.zeros(p.n))
        assert p.surrogate_gap(np.zeros(p.n)) >= 0.0

    def test_logistic_variant_builds(self):
        p = make_problem("relu_mlp", widths=(2, 8, 1), loss="logistic",
                         samples=32)
        i, x = clear_point(p, np.random.default_rng(4))
        fd = finite_diff(p, i, x, 1e-6)
        g = p.subgrad(i, x)
        assert np.linalg.norm(g - fd) / (1 + np.linalg.norm(fd)) <= 1e-5

    def test_leaky_variant_builds(self):
        p = make_problem("relu_mlp", activation="leaky_relu", samples=32)
        i, x = clear_point(p, np.random.default_rng(5))
        fd = finite_diff(p, i, x, 1e-6)
        g = p.subgrad(i, x)
        assert np.linalg.norm(g - fd) / (1 + np.linalg.norm(fd)) <= 1e-5

    def test_csv_dataset_roundtrip(self, tmp_path):
        rows = ["0.5,1.0,0", "-0.3,0.2,1", "0.9,-0.4,0"]
        path = tmp_path / "data.csv"
        path.write_text("\n".join(rows) + "\n")
        feats, labels = load_dataset_csv(path)
        assert feats.shape == (3, 2)
        assert np.array_equal(labels, [[1, 0], [0, 1], [1, 0]])
        p = make_problem("relu_mlp", csv_path=path)
        assert p.N == 3

    def test_csv_bad_class_rejected(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("0.1,0.2,7\n")
        with pytest.raises(ValueError):
            load_dataset_csv(path, output_width=2)


class TestNoisyLinear:
    def test_solution_is_stationary(self):
        p = make_problem("noisy_linear")
        assert p.gap(p.solution) <= 1e-9
        assert p.objective(p.solution) == pytest.approx(p.noiseless_optimum)

    def test_row_scale_raises_curvature(self):
        base = make_problem("noisy_linear")
        steep = make_problem("noisy_linear", row_scale=3.0)
        assert np.allclose(steep.A, 3.0 * base.A)

    def test_default_init_is_origin(self):
        p = make_problem("noisy_linear")
        assert np.array_equal(p.default_init(np.random.default_rng(0)),
                              np.zeros(p.n))


class TestOracleConsistency:
    @pytest.mark.parametrize("name", ["l1_center", "max_affine", "spurious",
                                      "relu_mlp", "noisy_linear"])
    def test_subgrad_matches_finite_difference(self, name):
        p = make_problem(name)
        rng = np.random.default_rng(6)
        for _ in range(10):
            i, x = clear_point(p, rng)
            fd = finite_diff(p, i, x, 1e-6)
            g = p.subgrad(i, x)
            rel = np.linalg.norm(g - fd) / (1.0 + np.linalg.norm(fd))
            assert rel <= 1e-5, f"{name}: rel err {rel:.2e}"


class TestCatalog:
    def test_unknown_name_rejected(self):
        with pytest.raises(KeyError):
            make_problem("does_not_exist")

    def test_index_range_checked(self):
        p = make_problem("l1_center")
        with pytest.raises(IndexError):
            p.value(p.N, np.zeros(p.n))

    def test_objective_is_component_mean(self):
        p = make_problem("l1_center")
        x = np.random.default_rng(7).normal(size=p.n)
        manual = np.mean([p.value(i, x) for i in range(p.N)])
        assert p.objective(x) == pytest.approx(manual, rel=1e-15)
