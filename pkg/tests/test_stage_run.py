import unittest
import json
import os
import sys
import tempfile
from unittest.mock import patch

# 添加项目根目录到系统路径
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from cadbd.errors import DomainError
from cadbd.model.artifact_repository import manifest_repository
from cadbd.model.stage_run import StageRun, StageStatus, stage_run_id
from cadbd.pipeline import StageContext, StageRunner, config_from_dict
from cadbd.store_client import ArtifactStore, default_output_root


def tiny_config():
    return config_from_dict({"conditions": {"training": [0.5]}}, config_hash="abc123")


class TestStageRun(unittest.TestCase):
    """测试阶段运行记录"""

    def test_create_stage_run(self):
        """测试创建阶段运行"""
        run = StageRun("simulate", "abc", 7, "0.1.0")
        self.assertEqual(run.status, StageStatus.PENDING)
        self.assertEqual(run.run_id, stage_run_id("simulate", "abc", 7))
        self.assertFalse(run.succeeded)

    def test_run_id_deterministic(self):
        """测试运行ID只取决于阶段、配置哈希与种子"""
        self.assertEqual(StageRun("train", "h", 1).run_id, StageRun("train", "h", 1).run_id)
        self.assertNotEqual(StageRun("train", "h", 1).run_id, StageRun("train", "h", 2).run_id)

    def test_serialization(self):
        """测试序列化和反序列化"""
        run = StageRun("estimate", "h", 1, "0.1.0", inputs={"b.csv": "2", "a.csv": "1"})
        run.update_status(StageStatus.COMPLETED)
        data = run.to_dict()
        self.assertEqual(data["status"], "completed")
        self.assertEqual(list(data["inputs"]), ["a.csv", "b.csv"])
        restored = StageRun.from_json(run.to_json())
        self.assertEqual(restored.to_dict(), data)
        self.assertTrue(restored.succeeded)

    def test_set_error(self):
        """测试记录失败原因"""
        run = StageRun("train", "h", 1)
        run.set_error(DomainError("坏数据"))
        self.assertEqual(run.status, StageStatus.FAILED)
        self.assertEqual(run.error_type, "DomainError")
        self.assertEqual(run.error, "坏数据")


class TestArtifactStore(unittest.TestCase):
    """测试文件系统产物存储"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.store = ArtifactStore(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_set_get_delete(self):
        """测试基本读写"""
        self.assertTrue(self.store.set("manifests/simulate", {"a": 1}))
        self.assertTrue(self.store.exists("manifests/simulate"))
        self.assertEqual(self.store.get("manifests/simulate"), {"a": 1})
        self.assertEqual(self.store.keys("manifests"), ["manifests/simulate"])
        self.assertTrue(self.store.delete("manifests/simulate"))
        self.assertFalse(self.store.delete("manifests/simulate"))
        self.assertEqual(self.store.get("manifests/simulate", "missing"), "missing")

    def test_invalid_key(self):
        """测试非法键返回失败而不抛出"""
        self.assertFalse(self.store.set("../escape", {}))
        self.assertFalse(self.store.exists(""))
        with self.assertRaises(ValueError):
            self.store.path_for("/abs")

    def test_default_root(self):
        """测试默认输出根目录取自环境变量"""
        with patch.dict(os.environ, {"CADBD_OUTPUT_ROOT": "/tmp/cadbd-runs"}):
            self.assertEqual(default_output_root(), "/tmp/cadbd-runs")

    def test_repository(self):
        """测试清单仓库"""
        repository = manifest_repository(self.store)
        run = StageRun("simulate", "h", 1)
        self.assertTrue(repository.save("simulate", run))
        self.assertEqual(repository.get("simulate").run_id, run.run_id)
        self.assertIsNone(repository.get("train"))
        self.assertEqual(repository.names(), ["simulate"])
        self.assertTrue(repository.path_for("simulate").endswith(os.path.join("manifests", "simulate.json")))


class TestStageRunner(unittest.TestCase):
    """测试阶段运行器"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.ctx = StageContext(tiny_config(), self.tmp.name)
        self.runner = StageRunner()

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, name, text):
        path = self.ctx.path(name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        return path

    def test_manifest_hashes(self):
        """测试清单记录输入输出的 SHA-256"""
        source = self._write("in.txt", "abc")

        def handler(ctx):
            return [source], [self._write("out.txt", "xyz")]

        self.runner.register_stage("demo", handler)
        run = self.runner.run_stage("demo", self.ctx)
        self.assertEqual(run.status, StageStatus.COMPLETED)
        self.assertEqual(run.inputs, {"in.txt": "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"})
        self.assertIn("out.txt", run.outputs)
        with open(self.ctx.path("manifests", "demo.json"), "r", encoding="utf-8") as fh:
            saved = json.load(fh)
        self.assertEqual(saved["config_hash"], "abc123")
        self.assertEqual(saved["seed"], 1)
        self.assertNotIn("timestamp", saved)

    def test_failure_recorded(self):
        """测试失败时清单记录错误并原样抛出"""
        def handler(ctx):
            raise DomainError("缺少上游产物")

        self.runner.register_stage("demo", handler)
        with self.assertRaises(DomainError):
            self.runner.run_stage("demo", self.ctx)
        saved = manifest_repository(self.ctx.store).get("demo")
        self.assertEqual(saved.status, StageStatus.FAILED)
        self.assertEqual(saved.error_type, "DomainError")

    def test_unknown_stage(self):
        """测试未知阶段名"""
        with self.assertRaises(DomainError):
            self.runner.run_stage("nope", self.ctx)

    def test_run_all_stops_on_failure(self):
        """测试顺序运行遇到失败即停止"""
        calls = []

        def ok(ctx):
            calls.append("ok")
            return [], []

        def bad(ctx):
            raise RuntimeError("boom")

        self.runner.register_stage("first", ok)
        self.runner.register_stage("second", bad)
        self.runner.register_stage("third", ok)
        with self.assertRaises(RuntimeError):
            self.runner.run_all(self.ctx, ["first", "second", "third"])
        self.assertEqual(calls, ["ok"])

    def test_missing_upstream(self):
        """测试缺少上游产物目录"""
        with self.assertRaises(DomainError):
            self.ctx.files_under("ensembles")
        with self.assertRaises(DomainError):
            self.ctx.require("transform", "transform.json")


if __name__ == '__main__':
    unittest.main()
