import unittest
import os
import sys
import tempfile

import numpy as np
import pandas as pd
import torch

# 添加项目根目录到系统路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cadbd.analysis import (
    FigureKind,
    emit_figure_data,
    euler_rollout,
    learned_range,
    minimum_covariance_eigenvalue,
    moment_term_decomposition,
    mse,
    nonnegative_fraction,
    oscillation_range,
    range_of_oscillations,
    reconstruct_observables,
)
from cadbd.data.dataset import EnsembleDataset, StandardizingTransform
from cadbd.errors import DomainError, RolloutFault
from cadbd.reduction.pca import ParameterSeries
from cadbd.candidates import hidden_species_names, lotka_volterra_motifs
from cadbd.reduction.tvr import TrainingPairs
from cadbd.subnet import InputMode, SubnetModel, SubnetSpec, TrainingConfig, train_subnet


class ConstantModel:
    """dθ̂/dt 恒为给定向量"""

    def __init__(self, rate):
        self.rate = np.asarray(rate, dtype=float)

    def predict(self, theta_hat, t):
        return self.rate


class DecayModel:
    def predict(self, theta_hat, t):
        return -np.asarray(theta_hat)


def make_series(offset=0.0, n=11, label=0.5):
    times = 10.0 + 0.1 * np.arange(n)
    matrix = np.stack([np.sin(times) + offset, np.cos(times), 0.5 + 0 * times, 0.2 * np.sin(times),
                       0.1 + 0 * times], axis=1)
    return ParameterSeries(times, matrix, 1, ["Ca_Cyt", "IP3"], label)


def make_ensemble(label=0.5):
    """三条轨迹相对基线偏移 −1、0、+1"""
    times = np.arange(0, 50.05, 0.1)
    base = 10.0 + 2.0 * np.sin(times)
    values = np.stack([base + k for k in (-1.0, 0.0, 1.0)])[:, :, None]
    return EnsembleDataset(times, values, ["Ca_Cyt"], [1, 2, 3], label)


class TestEulerRollout(unittest.TestCase):
    """测试显式欧拉积分"""

    def test_constant_rate(self):
        """测试常速率下终值为 θ̂0 + (T − t0)·F"""
        rate = np.array([1.0, -0.5, 0.0, 0.2, 0.01])
        theta0 = np.zeros(5)
        series = euler_rollout(ConstantModel(rate), theta0, 10.0, 12.0, 0.1, q=1)
        self.assertEqual(len(series), 21)
        np.testing.assert_allclose(series.times[-1], 12.0)
        np.testing.assert_allclose(series.matrix[-1], 2.0 * rate, atol=1e-12)

    def test_linear_decay(self):
        """测试线性衰减的欧拉解 (1 − dt)^k"""
        theta0 = np.ones(5)
        series = euler_rollout(DecayModel(), theta0, 0.0, 1.0, 0.1, q=1)
        np.testing.assert_allclose(series.matrix[:, 0], 0.9 ** np.arange(11), rtol=1e-12)

    def test_nonfinite_state(self):
        """测试状态出现非有限值时报告步数"""
        with self.assertRaises(RolloutFault) as ctx:
            euler_rollout(ConstantModel([np.inf] * 5), np.zeros(5), 0.0, 1.0, 0.1, q=1)
        self.assertEqual(ctx.exception.step, 1)

    def test_invalid_arguments(self):
        """测试非法步长与时间区间"""
        with self.assertRaises(DomainError):
            euler_rollout(DecayModel(), np.ones(5), 0.0, 1.0, 0.0, q=1)
        with self.assertRaises(DomainError):
            euler_rollout(DecayModel(), np.ones(5), 1.0, 0.0, 0.1, q=1)

    def test_uses_model_latent_dim(self):
        """测试默认从模型结构读取隐变量数"""
        model = SubnetModel(SubnetSpec(2, 1, widths=(4,), input_mode=InputMode.PARAMETERS), seed=0)
        series = euler_rollout(model, make_series().matrix[0], 10.0, 10.5, 0.1)
        self.assertEqual(series.q, 1)
        self.assertEqual(series.matrix.shape, (6, 5))


class TestMse(unittest.TestCase):
    """测试参数序列误差"""

    def test_zero_and_offset(self):
        """测试相同序列误差为零、平移后误差为平移量平方"""
        reference = make_series()
        self.assertEqual(mse(reference, reference), 0.0)
        self.assertAlmostEqual(mse(make_series(offset=0.5), reference), 0.25)

    def test_grid_mismatch(self):
        """测试网格或长度不一致"""
        reference = make_series()
        shifted = ParameterSeries(reference.times + 0.05, reference.matrix, 1)
        with self.assertRaises(DomainError):
            mse(shifted, reference)
        with self.assertRaises(DomainError):
            mse(make_series(n=5), reference)


class TestObservables(unittest.TestCase):
    """测试观测量重构"""

    def test_covariance_psd(self):
        """测试重构协方差半正定且最小特征值不小于 σ²"""
        series = make_series()
        observables = reconstruct_observables(series)
        eigen = minimum_covariance_eigenvalue(observables)
        self.assertTrue(np.all(eigen >= 0.1 - 1e-12))
        np.testing.assert_allclose(observables.mean, series.matrix[:, :2])

    def test_variance_kept_nonnegative(self):
        """测试 σ² 被驱向负值时积分后的协方差仍半正定"""
        theta0 = np.array([0.0, 0.0, 1.0, 1.0, 0.5])
        series = euler_rollout(ConstantModel([0.0, 0.0, 0.1, 0.1, -1.0]), theta0, 0.0, 4.0, 0.01, q=1)
        self.assertEqual(len(series), 401)
        self.assertTrue(np.all(series.matrix[:, -1] >= 0.0))
        self.assertEqual(series.matrix[-1, -1], 0.0)
        transform = StandardizingTransform(["Ca_Cyt", "IP3"], [100.0, 50.0], [4.0, 9.0])
        eigen = minimum_covariance_eigenvalue(reconstruct_observables(series, transform))
        self.assertGreaterEqual(float(np.min(eigen)), -1e-10)
        with self.assertRaises(DomainError):
            euler_rollout(ConstantModel(np.zeros(5)), np.array([0.0, 0.0, 1.0, 1.0, -0.1]), 0.0, 1.0, 0.1, q=1)

    def test_trained_rollout_psd(self):
        """测试两种输入模式训练后 400 步积分的重构协方差半正定"""
        species = ["Ca_Cyt", "IP3"]
        motifs = lotka_volterra_motifs(species + hidden_species_names(1))
        times = 10.0 + 0.1 * np.arange(30)
        inputs = np.stack([np.sin(times), np.cos(times), 0.5 * np.sin(2 * times), 0.3 * np.cos(times),
                           0.2 + 0.05 * np.sin(times)], axis=1)
        targets = np.stack([np.cos(times), -np.sin(times), np.cos(2 * times), -0.3 * np.sin(times),
                            0.05 * np.cos(times)], axis=1)
        pairs = [TrainingPairs(times, inputs, targets, 1, 0.5)]
        transform = StandardizingTransform(species, [100.0, 50.0], [4.0, 9.0])
        for mode in (InputMode.PARAMETERS, InputMode.CANDIDATES):
            n_motifs = len(motifs) if mode == InputMode.CANDIDATES else 0
            spec = SubnetSpec(2, 1, widths=(8,), input_mode=mode, n_motifs=n_motifs)
            model, _ = train_subnet(pairs, spec, motifs, TrainingConfig(rounds=5, batch_size=8, seed=0))
            series = euler_rollout(model, inputs[0], 10.0, 10.4, 0.001)
            self.assertEqual(len(series), 401, mode.value)
            eigen = minimum_covariance_eigenvalue(reconstruct_observables(series, transform))
            self.assertGreaterEqual(float(np.min(eigen)), -1e-10, mode.value)

    def test_inverse_transform(self):
        """测试逆标准化到计数单位"""
        series = make_series()
        transform = StandardizingTransform(["Ca_Cyt", "IP3"], [100.0, 50.0], [4.0, 1.0])
        observables = reconstruct_observables(series, transform)
        np.testing.assert_allclose(observables.mean[:, 0], 100.0 + 2.0 * series.matrix[:, 0])
        plain = reconstruct_observables(series)
        np.testing.assert_allclose(observables.cov[:, 0, 0], 4.0 * plain.cov[:, 0, 0])
        with self.assertRaises(DomainError):
            reconstruct_observables(series, transform.restrict(["Ca_Cyt"]))

    def test_frame_and_fraction(self):
        """测试观测量表头与非负比例"""
        observables = reconstruct_observables(make_series())
        frame = observables.to_frame()
        self.assertEqual(list(frame.columns), ["t", "mean_Ca_Cyt", "mean_IP3", "var_Ca_Cyt", "var_IP3"])
        fraction = nonnegative_fraction(observables)
        self.assertTrue(np.all((fraction["nonnegative_fraction"] >= 0) & (fraction["nonnegative_fraction"] <= 1)))


class TestTermDecomposition(unittest.TestCase):
    """测试均值导数按参数分解"""

    def test_terms_sum_to_mean_rate(self):
        """测试各项之和等于 b̂ 分量的预测导数"""
        model = SubnetModel(SubnetSpec(2, 1, widths=(6,), input_mode=InputMode.PARAMETERS), seed=2)
        with torch.no_grad():
            model.lf.a_mu[0, 0] = 0.8
            model.lf.b_sigma[0, 1] = 0.3
        series = make_series()
        frame = moment_term_decomposition(model, series, 0)
        predicted = model.predict(series.matrix, series.times)[:, 0]
        np.testing.assert_allclose(frame["total"].to_numpy(), predicted, atol=1e-10)
        np.testing.assert_allclose(frame["term_sigma2"].to_numpy(), 0.0)
        with self.assertRaises(DomainError):
            moment_term_decomposition(model, series, 2)


class TestOscillationRange(unittest.TestCase):
    """测试振荡范围"""

    def test_known_range(self):
        """测试均值 ± 标准差的极值"""
        result = oscillation_range(make_ensemble(), "Ca_Cyt", window=40.0, n_boot=50, seed=0)
        sd = np.sqrt(2.0 / 3.0)
        self.assertAlmostEqual(result.c_minus_min, 8.0 - sd, places=2)
        self.assertAlmostEqual(result.c_plus_max, 12.0 + sd, places=2)
        self.assertLessEqual(result.c_minus_ci[0], result.c_minus_ci[1])
        self.assertGreater(result.spread, 4.0)

    def test_scale(self):
        """测试换算为浓度"""
        plain = oscillation_range(make_ensemble(), n_boot=10)
        scaled = oscillation_range(make_ensemble(), n_boot=10, scale=10.0)
        self.assertAlmostEqual(scaled.c_plus_max, plain.c_plus_max / 10.0)

    def test_reproducible_bootstrap(self):
        """测试相同种子的置信区间一致"""
        a = oscillation_range(make_ensemble(), n_boot=30, seed=4)
        b = oscillation_range(make_ensemble(), n_boot=30, seed=4)
        self.assertEqual(a.c_plus_ci, b.c_plus_ci)

    def test_window_too_long(self):
        """测试窗口超出模拟时长"""
        with self.assertRaises(DomainError):
            oscillation_range(make_ensemble(), window=80.0)
        with self.assertRaises(DomainError):
            oscillation_range(make_ensemble(), window=0.0)

    def test_table(self):
        """测试按条件排序的范围表"""
        frame = range_of_oscillations({0.6: make_ensemble(0.6), 0.4: make_ensemble(0.4)}, n_boot=10)
        self.assertEqual(frame["label"].tolist(), [0.4, 0.6])
        self.assertIn("c_plus_hi", frame.columns)

    def test_learned_range(self):
        """测试由均值与方差序列计算范围"""
        times = np.arange(0, 50.05, 0.1)
        mean = 10.0 + np.sin(times)
        result = learned_range(mean, np.full_like(times, 4.0), times, window=40.0)
        self.assertAlmostEqual(result["c_plus_max"], 13.0, places=2)
        self.assertAlmostEqual(result["c_minus_min"], 7.0, places=2)


class TestFigures(unittest.TestCase):
    """测试图表数据导出"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_all_kinds(self):
        """测试四种图表的表头"""
        ranges = range_of_oscillations({0.5: make_ensemble()}, n_boot=5)
        learned = pd.DataFrame([{"label": 0.5, "c_minus_min": 1.0, "c_plus_max": 2.0}])
        path, = emit_figure_data("RangeDiagram", {"stochastic": ranges, "learned": learned}, self.tmp.name)
        frame = pd.read_csv(path)
        self.assertEqual(frame["source"].tolist(), ["stochastic", "learned"])
        self.assertTrue(np.isnan(frame["c_plus_hi"].iloc[1]))

        path, = emit_figure_data(FigureKind.PARAMETER_SLICES, {"ml": {0.5: make_series()}}, self.tmp.name)
        self.assertEqual(list(pd.read_csv(path).columns)[:4], ["label", "source", "t", "b_1"])

        records = [{"label": 0.5, "split": "training", "mode": "ReactionCandidates", "seed": 0, "mse": 0.1}]
        path, = emit_figure_data("MseCurves", {"records": records}, self.tmp.name)
        self.assertEqual(len(pd.read_csv(path)), 1)

        path, = emit_figure_data("TermDecomposition", {"species": "Ca_Cyt", "terms": {}}, self.tmp.name)
        self.assertEqual(list(pd.read_csv(path).columns)[:3], ["label", "species", "t"])

    def test_unknown_kind(self):
        """测试未知图表种类"""
        with self.assertRaises(DomainError):
            emit_figure_data("Heatmap", {}, self.tmp.name)
        with self.assertRaises(DomainError):
            emit_figure_data("ParameterSlices", {}, self.tmp.name)


if __name__ == '__main__':
    unittest.main()
