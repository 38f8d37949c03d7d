#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Collectors Test Script
프로파일 로더, 연산 그래프, 후보 필터 테스트
"""

import json
import logging
import os
import sys
import unittest
from dataclasses import replace

from hypothesis import given, settings, strategies as st

sys.path.append(os.path.dirname(os.path.abspath(__file__)))

from collectors.candidate_filter import (
    CandidateFilter, default_combo, score_variant, sequential_best_combo
)
from collectors.operation_graph import OperationKind, build_operation_graph
from collectors.profile_loader import ProfileLoader, dump_profile, load_profile
from collectors.profile_model import ExecutionMode, ProcessorClass
from collectors.synthetic_profiles import make_kernel, random_profile
from config import TestingConfig
from exceptions import ParseError, ProfileError, ValidationError
from processors.scheduler import compute_queue_time

logging.basicConfig(level=logging.WARNING)

PROFILES_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'data', 'profiles')


def fixture_path(name: str) -> str:
    return os.path.join(PROFILES_DIR, name)


def fixture_document(name: str) -> dict:
    with open(fixture_path(name), 'r', encoding='utf-8') as f:
        return json.load(f)


class ProfileLoaderTests(unittest.TestCase):
    """프로파일 로드/검증 테스트"""

    def setUp(self):
        self.loader = ProfileLoader()

    def test_01_conv3x3_fixture(self):
        """conv3x3 프로파일: 레이어 1개, 커널 6개"""
        profile = self.loader.load_file(fixture_path('conv3x3_kernels.json'))
        self.assertEqual(profile.n_layers, 1)
        self.assertEqual(len(profile.layers[0].candidates), 6)
        self.assertEqual(profile.layers[0].candidates[0].kernel_id, '3x3s1-winograd-pack4')
        self.assertEqual(profile.mode, ExecutionMode.CPU)

    def test_02_gpu_fixture(self):
        """GPU 프로파일: 드라이버 초기화 비용과 pipeline 생성 비용"""
        profile = self.loader.load_file(fixture_path('tx2_resnet50_gpu.json'))
        self.assertEqual(profile.mode, ExecutionMode.GPU)
        self.assertAlmostEqual(profile.setup.gpu_driver_init_ms, 3004.01)
        kernel = profile.layers[0].candidates[0]
        self.assertIsNotNone(kernel.pipeline_create)
        self.assertAlmostEqual(kernel.execute_on(ProcessorClass.GPU), 802.77)

    def test_03_malformed_json(self):
        """JSON 형식 오류는 ParseError"""
        with self.assertRaises(ParseError):
            self.loader.load_profile(b'{"model": "x", "layers": [')
        with self.assertRaises(ParseError):
            self.loader.load_profile('{"model": NaN}')

    def test_04_unknown_field_strict_and_lenient(self):
        """알려지지 않은 필드: 기본은 거부, --lenient 는 허용"""
        document = fixture_document('conv3x3_kernels.json')
        document['layers'][0]['comment'] = 'measured on a handset'
        text = json.dumps(document)
        with self.assertRaises(ValidationError):
            self.loader.load_profile(text)
        profile = ProfileLoader(lenient=True).load_profile(text)
        self.assertEqual(profile.n_layers, 1)

    def test_05_dangling_predecessor(self):
        """존재하지 않는 선행 레이어 참조는 ValidationError"""
        document = fixture_document('uniform_chain.json')
        document['layers'][2]['preds'] = [5]
        with self.assertRaises(ValidationError) as ctx:
            self.loader.from_document(document)
        self.assertIn('predecessor 5', str(ctx.exception))

    def test_06_duplicate_kernel_id(self):
        """한 레이어 안의 중복 kernel_id 거부"""
        document = fixture_document('conv3x3_kernels.json')
        document['layers'][0]['kernels'][1]['id'] = '3x3s1-winograd-pack4'
        with self.assertRaises(ValidationError):
            self.loader.from_document(document)

    def test_07_cache_noop_rule(self):
        """변환이 없는 커널의 캐시 read 는 원본 read 와 같아야 함"""
        document = fixture_document('conv3x3_kernels.json')
        document['layers'][0]['kernels'][4]['costs']['read_cached_ms'] = {'little': 1.0, 'big': 1.0}
        with self.assertRaises(ValidationError) as ctx:
            self.loader.from_document(document)
        self.assertIn('3x3s1', str(ctx.exception))

    def test_08_negative_duration_collects_all_errors(self):
        """음수 시간은 스키마 단계에서 모두 모아 보고"""
        document = fixture_document('conv3x3_kernels.json')
        document['layers'][0]['kernels'][0]['costs']['execute_ms']['big'] = -1
        document['setup']['memory_alloc_ms'] = -2
        with self.assertRaises(ValidationError) as ctx:
            self.loader.from_document(document)
        self.assertEqual(str(ctx.exception).count(';'), 1)

    def test_09_missing_file(self):
        """없는 파일은 ProfileError"""
        with self.assertRaises(ProfileError):
            self.loader.load_file(fixture_path('missing.json'))

    def test_10_gpu_fields_rejected_in_cpu_mode(self):
        """CPU 모드 프로파일에 GPU 드라이버 비용이 있으면 거부"""
        document = fixture_document('conv3x3_kernels.json')
        document['setup']['gpu_driver_init_ms'] = 10.0
        with self.assertRaises(ValidationError):
            self.loader.from_document(document)

    def test_11_dump_and_reload(self):
        """직렬화 후 다시 읽으면 같은 프로파일"""
        for name in ('conv3x3_kernels.json', 'tx2_resnet50_gpu.json', 'resnet50_synthetic.json'):
            profile = self.loader.load_file(fixture_path(name))
            self.assertEqual(load_profile(dump_profile(profile)), profile)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(min_value=0, max_value=10_000),
           gpu=st.booleans())
    def test_12_random_profiles_reload(self, seed, gpu):
        """무작위 프로파일도 직렬화/로드 후 동일"""
        mode = ExecutionMode.GPU if gpu else ExecutionMode.CPU
        profile = random_profile(seed, max_layers=5, max_kernels=3, mode=mode)
        self.assertEqual(load_profile(dump_profile(profile)), profile)


class OperationGraphTests(unittest.TestCase):
    """연산 그래프 생성 테스트"""

    @classmethod
    def setUpClass(cls):
        loader = ProfileLoader()
        cls.conv3x3 = loader.load_file(fixture_path('conv3x3_kernels.json'))
        cls.pixel5 = loader.load_file(fixture_path('pixel5_resnet50.json'))
        cls.tx2 = loader.load_file(fixture_path('tx2_resnet50_gpu.json'))

    def test_01_cpu_node_count(self):
        """CPU 모드: setup 1개 + 레이어마다 read/transform/execute"""
        combo = [layer.candidates[0] for layer in self.pixel5.layers]
        graph = build_operation_graph(self.pixel5, combo).validate()
        self.assertEqual(len(graph.nodes), 1 + 3 * 4)
        self.assertEqual(len(graph.setup_ops()), 1)
        self.assertEqual(graph.sink_executes(), [graph.execute_op(4)])

    def test_02_gpu_node_count(self):
        """GPU 모드: 메모리 할당 + 드라이버 + read/transform/pipeline/execute"""
        combo = [layer.candidates[0] for layer in self.tx2.layers]
        graph = build_operation_graph(self.tx2, combo).validate()
        kinds = [node.kind for node in graph.nodes]
        self.assertEqual(kinds.count(OperationKind.SETUP), 2)
        self.assertEqual(kinds.count(OperationKind.PIPELINE_CREATE), 1)
        self.assertEqual(len(graph.nodes), 6)
        pipeline = next(node for node in graph.nodes if node.kind is OperationKind.PIPELINE_CREATE)
        driver = next(node for node in graph.nodes if node.label == 'driver')
        self.assertIn(driver.op_id, pipeline.precursors)

    def test_03_cached_variant_has_no_transform(self):
        """캐시 변형은 Transform 노드 없이 read 만"""
        combo = [self.conv3x3.layers[0].kernel('3x3s1-winograd').as_cached()]
        graph = build_operation_graph(self.conv3x3, combo).validate()
        self.assertEqual([node.kind for node in graph.nodes], [OperationKind.READ, OperationKind.EXECUTE])
        self.assertAlmostEqual(graph.bundle_duration(1, ProcessorClass.BIG), 4.12)

    def test_04_execute_depends_on_bundle_and_predecessors(self):
        """Execute 는 자신의 번들과 선행 레이어 Execute 뒤"""
        profile = random_profile(3, n_layers=4)
        graph = build_operation_graph(profile, [layer.candidates[0] for layer in profile.layers])
        for layer in profile.layers:
            node = graph.nodes[graph.execute_op(layer.layer_index)]
            self.assertIn(graph.bundle(layer.layer_index)[-1], node.precursors)
            for pred in layer.predecessors:
                self.assertIn(graph.execute_op(pred), node.precursors)

    def test_05_topological_order(self):
        """위상 순서에서 선행 연산이 먼저"""
        profile = random_profile(11, n_layers=4)
        graph = build_operation_graph(profile, [layer.candidates[0] for layer in profile.layers])
        order = graph.topological_order()
        position = {op_id: k for k, op_id in enumerate(order)}
        for node in graph.nodes:
            for pred in node.precursors:
                self.assertLess(position[pred], position[node.op_id])

    def test_06_compute_queue_time(self):
        """sgemm-pack4 원본 [r, w, e] 큐 시간 = 0.70 + 2.21 + 8.14"""
        graph = build_operation_graph(self.conv3x3, [self.conv3x3.layers[0].kernel('sgemm-pack4')])
        self.assertAlmostEqual(compute_queue_time([0, 1, 2], ProcessorClass.BIG, graph), 11.05)
        self.assertEqual(compute_queue_time([], ProcessorClass.BIG, graph), 0)

    def test_07_shader_cache_graph(self):
        """shader 캐시 그래프는 pipeline 생성 비용을 hit 값으로 치환"""
        profile = random_profile(5, mode=ExecutionMode.GPU, n_layers=2)
        combo = [layer.candidates[0] for layer in profile.layers]
        miss = build_operation_graph(profile, combo)
        hit = miss.with_shader_cache()
        for before, after in zip(miss.nodes, hit.nodes):
            if before.kind is OperationKind.PIPELINE_CREATE:
                self.assertAlmostEqual(after.duration_on(ProcessorClass.BIG), before.shader_hit_ms)

    def test_08_combo_length_mismatch(self):
        """조합 길이가 레이어 수와 다르면 오류"""
        with self.assertRaises(ValueError):
            build_operation_graph(self.pixel5, [self.pixel5.layers[0].candidates[0]])

    def test_09_validate_rejects_cycle_and_bad_count(self):
        """순환이나 노드 수 불일치는 ValidationError (그래프 생성 시 항상 검사)"""
        graph = build_operation_graph(self.conv3x3, [self.conv3x3.layers[0].kernel('sgemm-pack4')])
        read = next(n for n in graph.nodes if n.kind is OperationKind.READ)
        execute = graph.nodes[graph.execute_ops()[-1]]
        nodes = tuple(replace(n, precursors=frozenset({execute.op_id})) if n is read else n for n in graph.nodes)
        cyclic = replace(graph, nodes=nodes)
        with self.assertRaises(ValidationError):
            cyclic.validate()
        with self.assertRaises(ValidationError):
            replace(graph, nodes=graph.nodes[:-1]).validate()


class CandidateFilterTests(unittest.TestCase):
    """커널 후보 나열과 파레토 필터 테스트"""

    @classmethod
    def setUpClass(cls):
        cls.config = TestingConfig()
        cls.conv3x3 = ProfileLoader().load_file(fixture_path('conv3x3_kernels.json'))
        cls.layer = cls.conv3x3.layers[0]

    def test_01_enumerate_suppresses_noop_cache(self):
        """변환 비용이 0 인 커널 2개는 캐시 쌍둥이 생략: 6 + 4 = 10개"""
        variants = CandidateFilter(self.config).enumerate_variants(self.layer)
        self.assertEqual(len(variants), 10)
        self.assertFalse(any(v.cached for v in variants if v.kernel_id in ('3x3s1', 'general')))

    def test_02_conv3x3_front(self):
        """conv3x3 파레토 프런트는 정확히 3개"""
        front = CandidateFilter(self.config).layer_front(self.layer)
        self.assertEqual(
            [(v.kernel_id, v.cached) for v in front],
            [('3x3s1-winograd-pack4', True), ('3x3s1-winograd', True), ('3x3s1', False)],
        )
        self.assertEqual([(round(v.prep_little_ms, 2), v.exec_ms) for v in front],
                         [(5.23, 2.98), (4.12, 3.37), (0.70, 8.01)])

    def test_03_conv3x3_front_without_cache(self):
        """--no-cache 프런트: winograd-pack4 원본과 3x3s1"""
        front = CandidateFilter(self.config, allow_cache=False).layer_front(self.layer)
        self.assertEqual([(v.kernel_id, v.cached) for v in front],
                         [('3x3s1-winograd-pack4', False), ('3x3s1', False)])

    def test_04_duplicate_costs_keep_first(self):
        """비용이 같은 변형은 먼저 선언된 것만 남김"""
        a = score_variant(1, make_kernel('a', 1.0, 1.0, 0.0, 0.0, 2.0), ExecutionMode.CPU)
        b = score_variant(1, make_kernel('b', 1.0, 1.0, 0.0, 0.0, 2.0), ExecutionMode.CPU)
        front = CandidateFilter(self.config).prune_dominated([a, b])
        self.assertEqual([v.kernel_id for v in front], ['a'])

    def test_05_empty_input(self):
        """빈 입력은 오류"""
        with self.assertRaises(ValueError):
            CandidateFilter(self.config).prune_dominated([])

    @settings(max_examples=200, deadline=None)
    @given(costs=st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=12))
    def test_06_front_matches_brute_force(self, costs):
        """무작위 변형 집합 (12개 이하): 프런트 = 전수 비교 결과"""
        variants = [score_variant(1, make_kernel(f"k{i}", prep / 2, prep / 2, 0.0, 0.0, exe / 2), ExecutionMode.CPU)
                    for i, (prep, exe) in enumerate(costs)]
        front = CandidateFilter(self.config).prune_dominated(variants)

        points = set(costs)
        minimal = {p for p in points
                   if not any(q != p and q[0] <= p[0] and q[1] <= p[1] for q in points)}
        expected = []
        for i, point in enumerate(costs):
            if point in minimal and point not in costs[:i]:
                expected.append(f"k{i}")
        self.assertEqual([v.kernel_id for v in front], expected)

    def test_07_default_and_sequential_best(self):
        """기본 조합은 첫 커널, 순차 최적은 big 준비 + 실행 최소"""
        self.assertEqual([s.kernel_id for s in default_combo(self.conv3x3)], ['3x3s1-winograd-pack4'])
        cached = sequential_best_combo(self.conv3x3, allow_cache=True, config=self.config)
        self.assertEqual((cached[0].kernel_id, cached[0].cached), ('3x3s1-winograd', True))
        raw = sequential_best_combo(self.conv3x3, allow_cache=False, config=self.config)
        self.assertEqual((raw[0].kernel_id, raw[0].cached), ('3x3s1', False))
        self.assertAlmostEqual(raw[0].prep_big_ms + raw[0].exec_ms, 8.71)

    def test_08_analyze_fronts(self):
        """프런트 통계: 조합 수는 프런트 크기의 곱"""
        profile = ProfileLoader().load_file(fixture_path('resnet50_synthetic.json'))
        candidate_filter = CandidateFilter(self.config)
        stats = candidate_filter.analyze_fronts(profile, candidate_filter.fronts(profile))
        self.assertEqual(stats['total_variants'], 5 * 5)
        self.assertEqual(stats['max_front_size'], 3)
        self.assertEqual(stats['combination_count'], 3 ** 5)

    @settings(max_examples=100, deadline=None)
    @given(costs=st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=10))
    def test_09_prune_is_idempotent(self, costs):
        """prune_dominated(prune_dominated(V)) = prune_dominated(V)"""
        variants = [score_variant(1, make_kernel(f"k{i}", prep / 2, prep / 2, 0.0, 0.0, exe / 2), ExecutionMode.CPU)
                    for i, (prep, exe) in enumerate(costs)]
        candidate_filter = CandidateFilter(self.config)
        front = candidate_filter.prune_dominated(variants)
        self.assertEqual(candidate_filter.prune_dominated(front), front)

    @settings(max_examples=100, deadline=None)
    @given(costs=st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=10),
           base=st.integers(0, 1000), worse=st.tuples(st.integers(0, 4), st.integers(0, 4)),
           position=st.integers(0, 1000))
    def test_10_adding_dominated_variant_keeps_front(self, costs, base, worse, position):
        """기존 변형보다 나쁜 변형을 어디에 끼워 넣어도 프런트는 그대로"""
        if worse == (0, 0):
            worse = (1, 0)
        variants = [score_variant(1, make_kernel(f"k{i}", prep / 2, prep / 2, 0.0, 0.0, exe / 2), ExecutionMode.CPU)
                    for i, (prep, exe) in enumerate(costs)]
        prep, exe = costs[base % len(costs)]
        extra = score_variant(1, make_kernel('extra', (prep + worse[0]) / 2, (prep + worse[0]) / 2, 0.0, 0.0,
                                             (exe + worse[1]) / 2), ExecutionMode.CPU)
        candidate_filter = CandidateFilter(self.config)
        index = position % (len(variants) + 1)
        extended = variants[:index] + [extra] + variants[index:]
        self.assertEqual(candidate_filter.prune_dominated(extended), candidate_filter.prune_dominated(variants))


def run_collector_tests():
    """수집(입력) 단계 테스트 실행 함수"""
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for test_class in (ProfileLoaderTests, OperationGraphTests, CandidateFilterTests):
        suite.addTests(loader.loadTestsFromTestCase(test_class))
    runner = unittest.TextTestRunner(verbosity=2, stream=sys.stdout)
    return runner.run(suite).wasSuccessful()


if __name__ == "__main__":
    print("🧪 프로파일/그래프/후보 필터 테스트 시작")
    print("=" * 60)
    sys.exit(0 if run_collector_tests() else 1)
