import unittest
import os
import sys
import tempfile

import numpy as np

# 添加项目根目录到系统路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cadbd.errors import ConfigError, DomainError
from cadbd.model import DykParams, Reaction, ReactionNetwork, Species
from cadbd.simulation.dyk import (
    CA_CYT,
    CA_ER,
    IP3,
    RECEPTOR_STATES,
    build_dyk_network,
    concentration_to_molecular_rate,
    deterministic_range,
    estimate_subunit_count,
    integrate_deterministic_dyk,
    peak_to_trough,
    subunit_generator,
    subunit_stationary_distribution,
    transport_rates,
)


class TestDykParams(unittest.TestCase):
    """测试模型参数"""

    def test_defaults(self):
        """测试默认参数与粒子换算"""
        p = DykParams()
        self.assertEqual(p.n_ip3r, 100)
        self.assertAlmostEqual(p.v_cyt, 1e-14)
        self.assertAlmostEqual(p.particles_per_micromolar, 6.02214076e23 * 1e-14 * 1e-6)

    def test_unknown_key(self):
        """测试未知参数名抛出带键名的配置错误"""
        with self.assertRaises(ConfigError) as ctx:
            DykParams.from_dict({"v9": 1.0})
        self.assertEqual(ctx.exception.key, "dyk.v9")

    def test_non_numeric_value(self):
        """测试非数值参数"""
        with self.assertRaises(ConfigError) as ctx:
            DykParams.from_dict({"a1": "fast"})
        self.assertEqual(ctx.exception.key, "dyk.a1")

    def test_invalid_values(self):
        """测试非法取值"""
        with self.assertRaises(DomainError):
            DykParams(v_cyt=0.0)
        with self.assertRaises(DomainError):
            DykParams(dt_ode=0.5, dt_write=0.1)
        with self.assertRaises(DomainError):
            DykParams(a1=-1.0)

    def test_from_yaml_and_hash(self):
        """测试从 YAML 加载以及哈希稳定性"""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "params.yaml")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("dyk:\n  n_ip3r: 250\n  a5: 30.0\n")
            p = DykParams.from_yaml(path)
        self.assertEqual(p.n_ip3r, 250)
        self.assertEqual(p.a5, 30.0)
        self.assertEqual(p.params_hash(), DykParams(n_ip3r=250, a5=30.0).params_hash())
        self.assertNotEqual(p.params_hash(), DykParams().params_hash())

    def test_unbinding_rate(self):
        """测试解离速率 b_i = a_i·d_i"""
        p = DykParams()
        self.assertAlmostEqual(p.unbinding_rate(1), 400.0 * 0.13)


class TestReactionNetwork(unittest.TestCase):
    """测试反应网络数据模型"""

    def test_stoichiometry(self):
        """测试化学计量向量"""
        r = Reaction({"A": 1, "B": 1}, {"C": 1}, 2.0, "A+B->C")
        self.assertEqual(r.order, 2)
        self.assertEqual(r.stoichiometry(["A", "B", "C"]).tolist(), [-1, -1, 1])

    def test_invalid_reactions(self):
        """测试非法反应"""
        with self.assertRaises(DomainError):
            Reaction({}, {}, 1.0)
        with self.assertRaises(DomainError):
            Reaction({"A": 1}, {}, -1.0)
        with self.assertRaises(DomainError):
            ReactionNetwork([Species("A")], [Reaction({"B": 1}, {}, 1.0, "B->0")])
        with self.assertRaises(DomainError):
            ReactionNetwork([Species("A"), Species("A")], [])

    def test_json(self):
        """测试网络 JSON 序列化"""
        network = build_dyk_network(DykParams())
        restored = ReactionNetwork.from_json(network.to_json())
        self.assertEqual(restored.species_names, network.species_names)
        np.testing.assert_array_equal(restored.stoichiometry_matrix(), network.stoichiometry_matrix())


class TestDykNetwork(unittest.TestCase):
    """测试 DYK 反应网络"""

    def setUp(self):
        self.p = DykParams()
        self.network = build_dyk_network(self.p)

    def test_shape(self):
        """测试 12 对亚基反应加 2 个输运反应"""
        self.assertEqual(len(self.network), 26)
        self.assertEqual(len(self.network.reactions_of("subunit")), 24)
        self.assertEqual(len(self.network.reactions_of("transport")), 2)
        self.assertEqual(len(self.network.species_names), 11)

    def test_receptor_conservation(self):
        """测试每个反应都保持受体总数不变"""
        nu = self.network.stoichiometry_matrix()
        index = [self.network.index(s) for s in RECEPTOR_STATES]
        self.assertTrue(np.all(nu[:, index].sum(axis=1) == 0))

    def test_calcium_conservation(self):
        """测试反应保持胞质钙与内质网钙之和不变"""
        nu = self.network.stoichiometry_matrix()
        total = nu[:, self.network.index(CA_CYT)] + nu[:, self.network.index(CA_ER)]
        transport = [j for j, r in enumerate(self.network.reactions) if r.family == "transport"]
        self.assertTrue(np.all(total[transport] == 0))

    def test_molecular_rate(self):
        """测试二级反应 γ = k/N"""
        n = self.p.particles_per_micromolar
        self.assertAlmostEqual(concentration_to_molecular_rate(400.0, [1, 1], self.p.v_cyt), 400.0 / n)
        self.assertAlmostEqual(concentration_to_molecular_rate(3.0, [1], self.p.v_cyt), 3.0)
        self.assertAlmostEqual(concentration_to_molecular_rate(1.0, [2], self.p.v_cyt), 2.0 / n)
        with self.assertRaises(DomainError):
            concentration_to_molecular_rate(1.0, [1], 0.0)

    def test_transport_rates(self):
        """测试输运速率与受体数的关系"""
        gamma_f, gamma_b = transport_rates(self.p)
        self.assertAlmostEqual(gamma_f, 6.0 * self.p.v1 / 100 ** 3)
        self.assertAlmostEqual(gamma_b / gamma_f, self.p.c1)
        with self.assertRaises(DomainError):
            transport_rates(DykParams(n_ip3r=0))


class TestSubunitChain(unittest.TestCase):
    """测试亚基马尔可夫链"""

    def test_generator_rows(self):
        """测试速率矩阵行和为零、非对角非负"""
        q = subunit_generator(DykParams(), 0.2, 0.5)
        np.testing.assert_allclose(q.sum(axis=1), 0.0, atol=1e-9)
        off = q - np.diag(np.diag(q))
        self.assertTrue(np.all(off >= 0))

    def test_stationary_distribution(self):
        """测试平稳分布满足 πQ = 0"""
        p = DykParams()
        pi = subunit_stationary_distribution(p, 0.2, 0.5)
        self.assertAlmostEqual(pi.sum(), 1.0)
        np.testing.assert_allclose(pi @ subunit_generator(p, 0.2, 0.5), 0.0, atol=1e-8)


class TestDeterministic(unittest.TestCase):
    """测试确定性参考模型"""

    def test_total_calcium(self):
        """测试确定性积分保持总钙不变"""
        times, ca = integrate_deterministic_dyk(DykParams(), 0.5, 2.0, dt=1e-3)
        self.assertEqual(len(times), len(ca))
        self.assertTrue(np.all(np.isfinite(ca)))
        self.assertTrue(np.all(ca > 0))

    def test_peak_to_trough(self):
        """测试峰谷差"""
        t = np.linspace(0, 100, 1001)
        self.assertAlmostEqual(peak_to_trough(t, np.sin(t)), 2.0, places=2)

    def test_subunit_estimate(self):
        """测试受体亚基数量级估计"""
        value = estimate_subunit_count(1e-14, 0.5, 3.0)
        self.assertGreater(value, 100)
        with self.assertRaises(DomainError):
            estimate_subunit_count(1e-14, 0.0, 3.0)

    def test_bifurcation_onset(self):
        """测试低 [IP3] 处于不动点、中等 [IP3] 出现持续振荡"""
        if os.getenv("CADBD_SLOW_TESTS") != "1":
            self.skipTest("设置 CADBD_SLOW_TESTS=1 以运行耗时测试")
        frame = deterministic_range(DykParams(), [0.2, 0.5], horizon=200.0, dt=1e-3)
        self.assertFalse(bool(frame["oscillating"].iloc[0]))
        self.assertTrue(bool(frame["oscillating"].iloc[1]))


if __name__ == '__main__':
    unittest.main()
