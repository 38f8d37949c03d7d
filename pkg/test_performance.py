#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - 성능 체크 스크립트
기준 시나리오별 실행 시간을 측정하고 상한을 넘지 않는지 확인
"""

import json
import os
import sys
import time
import unittest
from contextlib import contextmanager
from datetime import datetime
from typing import Dict

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from collectors.candidate_filter import CandidateFilter, default_combo
from collectors.operation_graph import build_operation_graph
from collectors.profile_loader import ProfileLoader
from collectors.profile_model import ExecutionMode, ProcessorClass
from collectors.synthetic_profiles import random_little_cores, random_profile, uniform_chain_profile
from config import TestingConfig
from processors.oracle import sequential_baseline
from processors.pipeline import ColdInferencePipeline
from processors.scheduler import KernelScheduler, sequential_plan
from processors.simulator import ColdInferenceSimulator, LoadInterval, PlatformConfig

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
PROFILES_DIR = os.path.join(BASE_DIR, 'data', 'profiles')


class PerformanceMonitor:
    """시나리오별 실행 시간 기록 클래스"""

    def __init__(self, name: str = "Performance Test"):
        self.name = name
        self.timings: Dict[str, float] = {}
        self.limits: Dict[str, float] = {}

    @contextmanager
    def measure(self, scenario: str, limit_s: float):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[scenario] = time.perf_counter() - start
            self.limits[scenario] = limit_s

    def print_report(self):
        print("\n" + "=" * 60)
        print(f"⚡ {self.name}")
        print("=" * 60)
        for scenario, seconds in self.timings.items():
            icon = "✅" if seconds < self.limits[scenario] else "❌"
            print(f"  {icon} {scenario}: {seconds:.3f}초 (상한 {self.limits[scenario]:.0f}초)")

    def save_report(self, path: str):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump({'name': self.name, 'generated_at': datetime.now().isoformat(),
                       'timings_s': self.timings, 'limits_s': self.limits}, f, ensure_ascii=False, indent=2)


class ScenarioRuntimeTests(unittest.TestCase):
    """기준 시나리오 실행 시간 테스트"""

    monitor = PerformanceMonitor("콜드 추론 스케줄러 성능 체크")

    @classmethod
    def setUpClass(cls):
        cls.config = TestingConfig()
        cls.simulator = ColdInferenceSimulator(cls.config)
        cls.scheduler = KernelScheduler(cls.config, simulator=cls.simulator)
        cls.loader = ProfileLoader()

    @classmethod
    def tearDownClass(cls):
        cls.monitor.print_report()

    def load(self, name: str):
        return self.loader.load_file(os.path.join(PROFILES_DIR, name))

    def assert_within(self, scenario: str):
        self.assertLess(self.monitor.timings[scenario], self.monitor.limits[scenario], scenario)

    def test_01_cpu_replay(self):
        """Pixel-5 순차 재생 < 1초"""
        with self.monitor.measure('cpu-replay', 1.0):
            profile = self.load('pixel5_resnet50.json')
            value = sequential_baseline(profile, default_combo(profile))
        self.assertAlmostEqual(value, 1363.26, places=6)
        self.assert_within('cpu-replay')

    def test_02_gpu_replay(self):
        """TX2 GPU 순차 재생 < 1초"""
        with self.monitor.measure('gpu-replay', 1.0):
            profile = self.load('tx2_resnet50_gpu.json')
            combo = default_combo(profile)
            graph = build_operation_graph(profile, [s.variant for s in combo])
            report = self.simulator.simulate_gpu(sequential_plan(graph, combo, 2), graph,
                                                 PlatformConfig(little_cores=2), shader_cache=False)
        self.assertAlmostEqual(report.makespan_ms, 5467.34, places=6)
        self.assert_within('gpu-replay')

    def test_03_single_layer_selection(self):
        """conv3x3 커널 선택 (캐시 허용/금지) < 1초"""
        with self.monitor.measure('kernel-selection', 1.0):
            profile = self.load('conv3x3_kernels.json')
            platform = PlatformConfig(little_cores=4)
            cached = self.scheduler.generate_plan(profile, platform, allow_cache=True)
            raw = self.scheduler.generate_plan(profile, platform, allow_cache=False)
        self.assertLess(cached.predicted_makespan_ms, raw.predicted_makespan_ms)
        self.assert_within('kernel-selection')

    def test_04_pareto_front(self):
        """conv3x3 파레토 프런트 < 1초"""
        with self.monitor.measure('pareto-front', 1.0):
            profile = self.load('conv3x3_kernels.json')
            front = CandidateFilter(self.config).layer_front(profile.layers[0])
        self.assertEqual(len(front), 3)
        self.assert_within('pareto-front')

    def test_05_lower_bound_corpus(self):
        """무작위 계획 코퍼스 하한 검사 < 10초"""
        violations = 0
        with self.monitor.measure('lower-bound-corpus', 10.0):
            for seed in range(60):
                mode = ExecutionMode.GPU if seed % 3 == 0 else ExecutionMode.CPU
                profile = random_profile(seed, mode=mode)
                platform = PlatformConfig(little_cores=random_little_cores(seed))
                plan = self.scheduler.generate_plan(profile, platform)
                graph = build_operation_graph(profile, [s.variant for s in plan.combo])
                if mode is ExecutionMode.GPU:
                    report = self.simulator.simulate_gpu(plan, graph, platform, shader_cache=False)
                else:
                    report = self.simulator.simulate(plan, graph, platform)
                setups = [graph.nodes[op].duration_on(ProcessorClass.BIG) for op in graph.setup_ops()]
                executes = sum(graph.nodes[op].duration_on(graph.execute_class) for op in graph.execute_ops())
                if report.makespan_ms < max(setups, default=0.0) + executes - 1e-9:
                    violations += 1
        self.assertEqual(violations, 0)
        self.assert_within('lower-bound-corpus')

    def test_06_ablation(self):
        """합성 프로파일 ablation < 5초"""
        with self.monitor.measure('ablation', 5.0):
            pipeline = ColdInferencePipeline(self.config)
            table = pipeline.run_ablation(self.load('resnet50_synthetic.json'))
        values = [row['makespan_ms'] for row in table]
        self.assertEqual(values, sorted(values, reverse=True))
        self.assert_within('ablation')

    def test_07_stealing(self):
        """부하/stealing 비교 < 5초"""
        with self.monitor.measure('stealing', 5.0):
            profile = uniform_chain_profile(6)
            combo = default_combo(profile)
            graph = build_operation_graph(profile, [s.variant for s in combo])
            quiet = PlatformConfig(little_cores=2)
            plan = self.scheduler.schedule_combination(graph, combo, quiet)
            loaded = quiet.with_load({'little1': [LoadInterval(0.0, 100000.0, 0.5)]})
            off = self.simulator.simulate_with_load(plan, graph, loaded, stealing=False).makespan_ms
            on = self.simulator.simulate_with_load(plan, graph, loaded, stealing=True).makespan_ms
        self.assertLess(on, off)
        self.assert_within('stealing')

    def test_08_warm_switch(self):
        """연속 추론 웜 전환 계획 < 5초"""
        with self.monitor.measure('warm-switch', 5.0):
            pipeline = ColdInferencePipeline(self.config, PlatformConfig(little_cores=2, disk_capacity=2.0))
            result = pipeline.run_plan(os.path.join(PROFILES_DIR, 'conv3x3_kernels.json'), continuous=True)
        self.assertAlmostEqual(result['warm']['second_inference_ms'], result['warm']['third_inference_ms'], places=6)
        self.assert_within('warm-switch')


def run_performance_test() -> bool:
    """성능 테스트 실행 함수"""
    suite = unittest.TestLoader().loadTestsFromTestCase(ScenarioRuntimeTests)
    result = unittest.TextTestRunner(verbosity=2, stream=sys.stdout).run(suite)
    return result.wasSuccessful()


if __name__ == '__main__':
    print("🚀 성능 테스트 시작")
    success = run_performance_test()
    if '--save' in sys.argv:
        path = f"performance_report_{datetime.now().strftime('%Y%m%d_%H%M%S')}.json"
        ScenarioRuntimeTests.monitor.save_report(path)
        print(f"💾 성능 보고서 저장: {path}")
    sys.exit(0 if success else 1)
