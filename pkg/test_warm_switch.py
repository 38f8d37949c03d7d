#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Warm Switch Test Script
연속 추론 모드: 콜드 추론 유휴 구간에 웜 커널 준비 배치, 두 번째/세 번째 추론 지연 시간
"""

import logging
import os
import sys
import unittest

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from collectors.operation_graph import build_operation_graph
from collectors.profile_loader import ProfileLoader
from collectors.profile_model import ExecutionMode, LayerSpec, ModelProfile, SetupCosts, validate_profile
from collectors.synthetic_profiles import make_kernel, uniform_chain_profile
from config import TestingConfig
from processors.scheduler import KernelScheduler
from processors.simulator import ColdInferenceSimulator, LoadInterval, PlatformConfig
from processors.warm_planner import WarmSwitchPlanner

logging.basicConfig(level=logging.WARNING)

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
CONV3X3 = os.path.join(BASE_DIR, 'data', 'profiles', 'conv3x3_kernels.json')


def four_layer_switch_profile() -> ModelProfile:
    """
    레이어 1~3 은 커널 하나, 레이어 4 는 준비가 빠른 커널과 실행이 빠른 커널 두 개
    """
    layers = []
    for index in range(1, 4):
        layers.append(LayerSpec(index, f"conv{index}", frozenset({index - 1}) if index > 1 else frozenset(),
                                (make_kernel('conv', 1.0, 0.5, 0.0, 0.0, 1.0),)))
    layers.append(LayerSpec(4, 'conv4', frozenset({3}), (
        make_kernel('fast-prep', 1.0, 0.5, 0.0, 0.0, 7.0),
        make_kernel('fast-exec', 3.0, 2.0, 3.0, 2.0, 6.5, read_cached=(20.0, 20.0)),
    )))
    return validate_profile(ModelProfile('warm-switch', ExecutionMode.CPU, tuple(layers), SetupCosts()))


class WarmSwitchTestCase(unittest.TestCase):
    """웜 전환 테스트 기본 클래스"""

    @classmethod
    def setUpClass(cls):
        cls.config = TestingConfig()
        cls.simulator = ColdInferenceSimulator(cls.config)
        cls.scheduler = KernelScheduler(cls.config, simulator=cls.simulator)
        cls.planner = WarmSwitchPlanner(cls.config, cls.simulator, cls.scheduler)

    def cold(self, profile, platform):
        plan = self.scheduler.generate_plan(profile, platform)
        graph = build_graph(profile, plan)
        return plan, self.simulator.simulate(plan, graph, platform)


def build_graph(profile, plan):
    return build_operation_graph(profile, [score.variant for score in plan.combo])


class IdleWindowPlacementTests(WarmSwitchTestCase):
    """유휴 구간 배치 테스트"""

    def setUp(self):
        self.profile = four_layer_switch_profile()
        self.platform = PlatformConfig(little_cores=1, disk_capacity=4.0, mem_capacity=4.0)
        self.plan, self.report = self.cold(self.profile, self.platform)

    def test_01_cold_plan(self):
        """콜드 추론은 준비가 빠른 커널, 10.5ms"""
        self.assertEqual(self.plan.combo[3].kernel_id, 'fast-prep')
        self.assertAlmostEqual(self.report.makespan_ms, 10.5, places=6)

    def test_02_idle_windows(self):
        """little1 은 3.0ms 부터 makespan 까지 유휴"""
        windows = self.planner.idle_windows(self.report, self.platform)
        self.assertEqual([(w.core, w.start_ms, w.end_ms) for w in windows], [('little1', 3.0, 10.5)])

    def test_03_extra_prep_fits(self):
        """레이어 4 웜 준비가 little1 의 3.0~9.0ms 에 배치되고 이월 없음"""
        wsp = self.planner.plan_warm_switch(self.plan, self.report, self.profile, self.platform)
        self.assertEqual(wsp.switch_layers, [4])
        self.assertEqual(wsp.k_warm[3].kernel_id, 'fast-exec')
        self.assertFalse(wsp.k_warm[3].cached)
        self.assertEqual(wsp.residual, ())

        self.assertEqual(len(wsp.extra_preps), 1)
        extra = wsp.extra_preps[0]
        self.assertEqual((extra.layer_index, extra.core), (4, 'little1'))
        self.assertAlmostEqual(extra.start_ms, 3.0, places=6)
        self.assertAlmostEqual(extra.end_ms, 9.0, places=6)
        self.assertLessEqual(extra.end_ms, self.report.makespan_ms)

        # 준비 번들을 끼워 넣어도 콜드 연산 종료 시각은 그대로
        graph = build_graph(self.profile, self.plan)
        _, injected, _ = self.planner._inject(self.plan, self.report, graph,
                                              [(4, wsp.k_warm[3], 'little1', 3.0)], self.platform, False)
        self.assertTrue(self.planner._undisturbed(self.report, injected))
        self.assertAlmostEqual(injected.makespan_ms, 10.5, places=6)

    def test_04_later_inferences(self):
        """두 번째 = 세 번째 = 웜 Execute 합 9.5ms"""
        wsp = self.planner.plan_warm_switch(self.plan, self.report, self.profile, self.platform)
        second = self.planner.second_inference_latency(wsp, self.profile, self.platform)
        third = self.planner.third_inference_latency(wsp)
        self.assertAlmostEqual(second, 9.5, places=6)
        self.assertAlmostEqual(third, 9.5, places=6)

    def test_05_to_dict(self):
        """직렬화 형식"""
        data = self.planner.plan_warm_switch(self.plan, self.report, self.profile, self.platform).to_dict()
        self.assertEqual(set(data), {'k_cold', 'k_warm', 'extra_preps', 'residual'})
        self.assertEqual(data['extra_preps'][0]['kernel'], 'fast-exec')
        self.assertEqual(data['k_cold'][3], {'layer': 4, 'kernel': 'fast-prep', 'cached': False})


class ResidualTests(WarmSwitchTestCase):
    """유휴 구간에 맞지 않는 경우와 전환이 없는 경우"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.conv3x3 = ProfileLoader().load_file(CONV3X3)

    def test_01_conv3x3_fits_with_disk_headroom(self):
        """disk_capacity 2.0: 웜 커널 캐시 read 가 콜드 read 를 늦추지 않아 배치 성공"""
        platform = PlatformConfig(little_cores=2, disk_capacity=2.0)
        plan, report = self.cold(self.conv3x3, platform)
        wsp = self.planner.plan_warm_switch(plan, report, self.conv3x3, platform)
        self.assertEqual(wsp.k_warm[0].kernel_id, '3x3s1-winograd-pack4')
        self.assertTrue(wsp.k_warm[0].cached)
        self.assertEqual(wsp.residual, ())
        self.assertEqual([prep.core for prep in wsp.extra_preps], ['little1'])
        self.assertAlmostEqual(self.planner.second_inference_latency(wsp, self.conv3x3, platform), 2.98, places=6)

    def test_02_conv3x3_residual_under_contention(self):
        """disk_capacity 1.5: 경합으로 콜드 종료가 바뀌므로 이월, 두 번째 추론 8.21ms"""
        platform = PlatformConfig(little_cores=2, disk_capacity=1.5)
        plan, report = self.cold(self.conv3x3, platform)
        wsp = self.planner.plan_warm_switch(plan, report, self.conv3x3, platform)
        self.assertEqual(wsp.extra_preps, ())
        self.assertEqual(wsp.residual, (1,))

        second = self.planner.second_inference_latency(wsp, self.conv3x3, platform)
        third = self.planner.third_inference_latency(wsp)
        self.assertAlmostEqual(second, 8.21, places=6)
        self.assertAlmostEqual(third, 2.98, places=6)
        # 세 번째 ≤ 두 번째 ≤ 웜 커널 콜드 시작 (캐시 read + 실행)
        self.assertLessEqual(third, second)
        self.assertLessEqual(second, 5.23 + 2.98 + 1e-6)

    def test_03_load_does_not_change_placement(self):
        """배경 부하가 있어도 부하 없는 타임라인 기준으로 같은 계획"""
        quiet = PlatformConfig(little_cores=2, disk_capacity=2.0)
        plan, report = self.cold(self.conv3x3, quiet)
        loaded = quiet.with_load({'little2': [LoadInterval(0.0, 1000.0, 0.5)]})
        loaded_report = self.simulator.simulate(plan, build_graph(self.conv3x3, plan), loaded)
        expected = self.planner.plan_warm_switch(plan, report, self.conv3x3, quiet)
        actual = self.planner.plan_warm_switch(plan, loaded_report, self.conv3x3, loaded)
        self.assertEqual(actual.to_dict(), expected.to_dict())

    def test_04_single_kernel_needs_no_switch(self):
        """커널 후보가 하나뿐이면 전환 없음: 두 번째 = 세 번째 = Execute 합"""
        profile = uniform_chain_profile(4)
        platform = PlatformConfig(little_cores=2)
        plan, report = self.cold(profile, platform)
        wsp = self.planner.plan_warm_switch(plan, report, profile, platform)
        self.assertEqual(wsp.switch_layers, [])
        self.assertEqual((wsp.extra_preps, wsp.residual), ((), ()))
        self.assertAlmostEqual(self.planner.second_inference_latency(wsp, profile, platform), 4.0)
        self.assertAlmostEqual(self.planner.third_inference_latency(wsp), 4.0)


def run_warm_switch_tests():
    """웜 전환 테스트 실행 함수"""
    test_classes = [
        IdleWindowPlacementTests,
        ResidualTests,
    ]
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for test_class in test_classes:
        suite.addTests(loader.loadTestsFromTestCase(test_class))
    runner = unittest.TextTestRunner(verbosity=2, stream=sys.stdout)
    return runner.run(suite).wasSuccessful()


if __name__ == '__main__':
    print("🧪 웜 전환 테스트 시작")
    print("=" * 60)
    sys.exit(0 if run_warm_switch_tests() else 1)
