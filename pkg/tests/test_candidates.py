import unittest
import os
import sys

import numpy as np
import torch
from scipy.integrate import solve_ivp

# 添加项目根目录到系统路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cadbd.candidates import (
    GaussianParams,
    LatentFourier,
    Moments,
    MotifFactory,
    candidate_blocks,
    candidate_vector,
    closed_moment_rhs,
    conserving_motifs,
    fit_candidate_standardization,
    fourier_latent,
    gaussian_closure_third_moment,
    gaussian_moments,
    hidden_species_names,
    lotka_volterra_motifs,
    motifs_from_dict,
    motifs_to_dict,
    observables_to_param_rhs,
    standard_to_param_rhs,
    to_standard_rhs,
)
from cadbd.candidates.library import block_dimension
from cadbd.candidates.moments import tracked_from_moments
from cadbd.errors import DomainError
from cadbd.model.reaction import birth_network, decay_network
from cadbd.reduction.pca import ParameterSeries, standard_dim
from cadbd.simulation.ssa import HybridSimulator


def tensor(values):
    return torch.as_tensor(values, dtype=torch.float64)


def sample_params():
    """两个可见物种、一个隐变量的完整参数"""
    return GaussianParams(b=tensor([1.5, 0.8]), w=tensor([[0.6], [-0.3]]), sigma2=tensor(0.2),
                          mu_h=tensor([0.4]), sigma_h=tensor([1.3]))


class TestMotifs(unittest.TestCase):
    """测试反应基元"""

    def setUp(self):
        self.species = ["A", "B"] + hidden_species_names(1)

    def test_lotka_volterra_count(self):
        """测试 LV 基元集合：每物种两个，每个有序对一个"""
        motifs = lotka_volterra_motifs(self.species)
        self.assertEqual(len(motifs), 2 * 3 + 3 * 2)
        self.assertEqual(len(set(motifs)), len(motifs))

    def test_stoichiometry(self):
        """测试各类基元的化学计量"""
        pp = MotifFactory.create_motif("PredatorPrey", {"H": "A", "P": "B"}, self.species)
        self.assertEqual(pp.stoichiometry(), {0: 1, 1: -1})
        self.assertEqual(pp.propensity_indices(), (0, 1))
        death = MotifFactory.create_motif("Death", {"H": "X1"}, self.species)
        self.assertEqual(death.stoichiometry(), {2: -1})

    def test_unknown_kind(self):
        """测试未知基元种类"""
        with self.assertRaises(DomainError):
            MotifFactory.create_motif("Dimerization", {"A": "A"}, self.species)

    def test_invalid_roles(self):
        """测试角色缺失、物种未知与重复"""
        with self.assertRaises(DomainError):
            MotifFactory.create_motif("Birth", {"H": "A"}, self.species)
        with self.assertRaises(DomainError):
            MotifFactory.create_motif("Birth", {"P": "Z"}, self.species)
        with self.assertRaises(DomainError):
            MotifFactory.create_motif("PredatorPrey", {"H": "A", "P": "A"}, self.species)

    def test_conserving(self):
        """测试守恒基元的 R 必须是守恒物种"""
        motifs = conserving_motifs(self.species, "B")
        self.assertEqual([m.roles["A"] for m in motifs], ["A", "X1"])
        with self.assertRaises(DomainError):
            MotifFactory.create_motif("Conserving", {"A": "B", "R": "A"}, self.species, conserved="B")
        with self.assertRaises(DomainError):
            conserving_motifs(self.species, "C")

    def test_dict_round_trip(self):
        """测试基元列表的字典形式"""
        motifs = lotka_volterra_motifs(self.species)[:4]
        self.assertEqual(motifs_from_dict(motifs_to_dict(motifs), self.species), motifs)


class TestMomentClosure(unittest.TestCase):
    """测试矩方程与高斯闭合"""

    def test_closure_exact_for_gaussian(self):
        """测试高斯分布下三阶矩闭合与解析值一致"""
        mu = np.array([1.0, 2.0, 3.0])
        cov = np.array([[1.0, 0.3, 0.2], [0.3, 2.0, -0.4], [0.2, -0.4, 1.5]])
        m2 = cov + np.outer(mu, mu)
        exact = mu[0] * mu[1] * mu[2] + mu[0] * cov[1, 2] + mu[1] * cov[0, 2] + mu[2] * cov[0, 1]
        closed = gaussian_closure_third_moment(mu[0], mu[1], mu[2], m2[0, 1], m2[0, 2], m2[1, 2])
        self.assertAlmostEqual(closed, exact)

    def test_birth(self):
        """测试 P → 2P 的均值与方差导数"""
        species = ["A"] + hidden_species_names(1)
        phi = Moments(tensor([2.0, 1.0]), tensor([[1.0, 0.5], [0.5, 2.0]]), 1)
        motif = MotifFactory.create_motif("Birth", {"P": "A"}, species)
        rates = closed_moment_rhs(motif, phi)
        self.assertAlmostEqual(float(rates.d_mu_v[0]), 2.0)
        # dVar = 2·Var + μ
        self.assertAlmostEqual(float(rates.d_tr_cv), 4.0)
        self.assertAlmostEqual(float(rates.d_c_vh[0, 0]), 0.5)
        self.assertAlmostEqual(float(rates.d_mu_h[0]), 0.0)
        self.assertAlmostEqual(float(rates.d_sigma_h[0]), 0.0)

    def test_death(self):
        """测试 H → ∅ 的均值与方差导数"""
        species = ["A"] + hidden_species_names(1)
        phi = Moments(tensor([2.0, 1.0]), tensor([[1.0, 0.5], [0.5, 2.0]]), 1)
        motif = MotifFactory.create_motif("Death", {"H": "A"}, species)
        rates = closed_moment_rhs(motif, phi)
        self.assertAlmostEqual(float(rates.d_mu_v[0]), -2.0)
        # dVar = −2·Var + μ
        self.assertAlmostEqual(float(rates.d_tr_cv), 0.0)

    def test_predator_prey_conserves_total(self):
        """测试 H + P → 2H 保持两者均值之和"""
        species = ["A", "B"] + hidden_species_names(1)
        phi = gaussian_moments(sample_params())
        motif = MotifFactory.create_motif("PredatorPrey", {"H": "A", "P": "B"}, species)
        rates = closed_moment_rhs(motif, phi)
        self.assertAlmostEqual(float(rates.d_mu_v.sum()), 0.0)

    def test_conserved_species_mean_rate(self):
        """测试守恒基元下守恒物种的均值导数恰为零"""
        species = ["A", "R"] + hidden_species_names(1)
        phi = gaussian_moments(sample_params())
        for motif in conserving_motifs(species, "R"):
            rates = closed_moment_rhs(motif, phi)
            self.assertEqual(float(rates.d_mu_v[1]), 0.0)

    def test_index_out_of_range(self):
        """测试基元下标超出物种数"""
        motif = MotifFactory.create_motif("Birth", {"P": "X1"}, ["A", "B", "X1"])
        phi = Moments(tensor([1.0, 1.0]), tensor(np.eye(2)), 1)
        with self.assertRaises(DomainError):
            closed_moment_rhs(motif, phi)


class TestClosureAgainstSimulation(unittest.TestCase):
    """测试闭合矩方程与直接法集合矩一致"""

    TRAJECTORIES = 10000
    CHECKPOINTS = np.linspace(0.1, 1.0, 10)

    def integrate_closed(self, motif, n0):
        """从确定初值 (μ=n0, C=0) 积分闭合后的均值与方差"""
        def rhs(t, y):
            phi = Moments(tensor([y[0]]), tensor([[y[1]]]), 1)
            rates = closed_moment_rhs(motif, phi)
            return [float(rates.d_mu_v[0]), float(rates.d_tr_cv)]

        solution = solve_ivp(rhs, (0.0, 1.0), [float(n0), 0.0], t_eval=self.CHECKPOINTS, rtol=1e-10, atol=1e-10)
        self.assertTrue(solution.success)
        return solution.y[0], solution.y[1]

    def simulate_moments(self, network, n0):
        """返回各检查点上的样本均值、方差及其标准误"""
        simulator = HybridSimulator(network)
        samples = np.empty((self.TRAJECTORIES, len(self.CHECKPOINTS)))
        for seed in range(self.TRAJECTORIES):
            samples[seed] = simulator.run([n0], 1.0, 0.1, 0.1, seed, seed).counts[1:, 0]
        m = self.TRAJECTORIES
        mean = samples.mean(axis=0)
        var = samples.var(axis=0, ddof=1)
        fourth = np.mean((samples - mean) ** 4, axis=0)
        return mean, var, np.sqrt(var / m), np.sqrt(np.maximum(fourth - var ** 2, 0.0) / m)

    def assert_matches(self, motif, network, n0):
        closed_mean, closed_var = self.integrate_closed(motif, n0)
        mean, var, mean_se, var_se = self.simulate_moments(network, n0)
        for k, t in enumerate(self.CHECKPOINTS):
            self.assertLessEqual(abs(closed_mean[k] - mean[k]), 3.0 * mean_se[k], f"均值 t={t:.1f}")
            self.assertLessEqual(abs(closed_var[k] - var[k]), 3.0 * var_se[k], f"方差 t={t:.1f}")

    def test_birth(self):
        """测试 Birth 基元：闭合矩与 P -> 2P 的模拟矩一致"""
        motif = MotifFactory.create_motif("Birth", {"P": "A"}, ["A"])
        self.assert_matches(motif, birth_network("A", 1.0), 20)

    def test_death(self):
        """测试 Death 基元：闭合矩与 A -> ∅ 的模拟矩一致"""
        motif = MotifFactory.create_motif("Death", {"H": "A"}, ["A"])
        self.assert_matches(motif, decay_network("A", 1.0), 50)

    def test_closed_solution_is_analytic(self):
        """测试闭合方程的积分与线性反应的解析矩一致"""
        motif = MotifFactory.create_motif("Death", {"H": "A"}, ["A"])
        mean, var = self.integrate_closed(motif, 50)
        decay = np.exp(-self.CHECKPOINTS)
        np.testing.assert_allclose(mean, 50 * decay, rtol=1e-7)
        np.testing.assert_allclose(var, 50 * decay * (1 - decay), rtol=1e-6)


class TestParamTransforms(unittest.TestCase):
    """测试观测量导数与参数导数之间的换算"""

    def setUp(self):
        self.theta = sample_params()
        self.d_theta = GaussianParams(b=tensor([0.1, -0.2]), w=tensor([[0.05], [0.3]]), sigma2=tensor(-0.01),
                                      mu_h=tensor([0.7]), sigma_h=tensor([-0.2]))

    def _tracked_by_difference(self, h=1e-6):
        plus = GaussianParams(*(a + h * d for a, d in zip(self.theta, self.d_theta)))
        minus = GaussianParams(*(a - h * d for a, d in zip(self.theta, self.d_theta)))
        phi_plus, phi_minus = gaussian_moments(plus), gaussian_moments(minus)
        d_mu = (phi_plus.mu - phi_minus.mu) / (2 * h)
        d_cov = (phi_plus.cov - phi_minus.cov) / (2 * h)
        return tracked_from_moments(d_mu, d_cov, 2)

    def test_inverts_moment_map(self):
        """测试由观测量导数反解出原参数导数"""
        rates = observables_to_param_rhs(self._tracked_by_difference(), self.theta)
        np.testing.assert_allclose(rates.f_b.numpy(), self.d_theta.b.numpy(), atol=1e-6)
        np.testing.assert_allclose(rates.f_w.numpy(), self.d_theta.w.numpy(), atol=1e-6)
        self.assertAlmostEqual(float(rates.f_sigma2), float(self.d_theta.sigma2), places=6)

    def test_standard_round_trip(self):
        """测试标准参数导数换算可逆"""
        rates = observables_to_param_rhs(self._tracked_by_difference(), self.theta)
        f_hat = to_standard_rhs(rates, self.theta).to_vector()
        back = standard_to_param_rhs(f_hat, self.theta, rates.f_mu_h, rates.f_sigma_h, 1)
        np.testing.assert_allclose(back.f_w.numpy(), rates.f_w.numpy(), atol=1e-12)
        np.testing.assert_allclose(back.f_b.numpy(), rates.f_b.numpy(), atol=1e-12)

    def test_non_diagonal_latent_rate(self):
        """测试 dΣ_h/dt 非对角时报错"""
        theta = GaussianParams(b=tensor([0.0, 0.0, 0.0]), w=tensor(np.ones((3, 2))), sigma2=tensor(0.1),
                               mu_h=tensor([0.0, 0.0]), sigma_h=tensor([1.0, 1.0]))
        rates = observables_to_param_rhs(
            tracked_from_moments(tensor(np.zeros(5)), tensor(np.zeros((5, 5))), 3), theta)
        bad = rates._replace(f_sigma_h=tensor([[0.0, 1.0], [1.0, 0.0]]))
        with self.assertRaises(DomainError):
            to_standard_rhs(bad, theta)


class TestLatentFourier(unittest.TestCase):
    """测试隐变量傅里叶参数"""

    def test_zero_coefficients(self):
        """测试系数全零时 μ_h = 0、Σ_h ≈ 1"""
        lf = LatentFourier(2)
        mu_h, sigma_h = fourier_latent(tensor([0.0, 1.5, 3.0]), lf)
        self.assertEqual(tuple(mu_h.shape), (3, 2))
        np.testing.assert_allclose(mu_h.detach().numpy(), 0.0)
        np.testing.assert_allclose(sigma_h.detach().numpy(), 1.0, atol=1e-7)

    def test_derivative_matches_difference(self):
        """测试解析导数与中心差分一致"""
        lf = LatentFourier.bootstrap(1, frequencies=[0.3, 0.9])
        with torch.no_grad():
            lf.a_mu[0, 0] = 0.4
            lf.b_sigma[0, 0] = -0.2
        h = 1e-6
        t = tensor([2.0, 7.5])
        d_mu, d_sigma = lf.derivative(t)
        mu_p, sigma_p = lf(t + h)
        mu_m, sigma_m = lf(t - h)
        np.testing.assert_allclose(d_mu.detach().numpy(), ((mu_p - mu_m) / (2 * h)).detach().numpy(), atol=1e-6)
        np.testing.assert_allclose(d_sigma.detach().numpy(), ((sigma_p - sigma_m) / (2 * h)).detach().numpy(),
                                   atol=1e-6)

    def test_latent_variance_positive(self):
        """测试 Σ_h 始终为正"""
        lf = LatentFourier.bootstrap(1)
        with torch.no_grad():
            lf.a_sigma.fill_(-5.0)
        _, sigma_h = lf(torch.linspace(0, 100, 501, dtype=torch.float64))
        self.assertTrue(bool(torch.all(sigma_h > 0)))

    def test_dict_shape_check(self):
        """测试加载系数时检查形状"""
        data = LatentFourier(1, [0.5, 1.0]).to_dict()
        self.assertEqual(LatentFourier.from_dict(data).n_frequencies, 2)
        data["a_mu"] = [[0.0, 0.0, 0.0]]
        with self.assertRaises(DomainError):
            LatentFourier.from_dict(data)

    def test_invalid(self):
        """测试非法隐变量数"""
        with self.assertRaises(DomainError):
            LatentFourier(0)


class TestCandidateLibrary(unittest.TestCase):
    """测试候选输入库"""

    def setUp(self):
        self.species = ["A", "R"] + hidden_species_names(1)
        rng = np.random.default_rng(0)
        self.times = np.linspace(10.0, 12.0, 5)
        matrix = rng.normal(size=(5, standard_dim(2, 1)))
        matrix[:, -1] = 0.1 + rng.random(5)
        self.series = ParameterSeries(self.times, matrix, 1, ["A", "R"], 0.5)

    def test_block_shape(self):
        """测试候选块形状为 (T, 基元数, D̂)"""
        motifs = lotka_volterra_motifs(self.species)
        lf = LatentFourier.bootstrap(1)
        blocks = candidate_blocks(self.series.matrix, self.series.times, lf, motifs)
        self.assertEqual(tuple(blocks.shape), (5, len(motifs), 5))
        vector = candidate_vector(self.series.matrix, self.series.times, lf, motifs)
        self.assertEqual(vector.shape[-1], block_dimension(2, 1, motifs))

    def test_conserved_block_zero(self):
        """测试守恒基元块中守恒物种的 b̂ 分量恰为零"""
        motifs = conserving_motifs(self.species, "R")
        blocks = candidate_blocks(self.series.matrix, self.series.times, LatentFourier.bootstrap(1), motifs)
        self.assertTrue(bool(torch.all(blocks[..., 1] == 0.0)))

    def test_no_motifs(self):
        """测试空基元集合"""
        with self.assertRaises(DomainError):
            candidate_blocks(self.series.matrix, self.series.times, LatentFourier(1), [])

    def test_standardization(self):
        """测试候选标准化的均值、标准差与下限"""
        motifs = conserving_motifs(self.species, "R")
        standardization = fit_candidate_standardization(self.series, LatentFourier.bootstrap(1), motifs)
        self.assertEqual(len(standardization.mean), block_dimension(2, 1, motifs))
        self.assertTrue(np.all(standardization.std >= 1e-12))
        with torch.no_grad():
            values = candidate_vector(self.series.matrix, self.series.times, LatentFourier.bootstrap(1), motifs)
            scaled = standardization.apply(values).numpy()
        varying = standardization.std > 1e-6
        np.testing.assert_allclose(scaled.mean(axis=0)[varying], 0.0, atol=1e-9)


if __name__ == '__main__':
    unittest.main()
