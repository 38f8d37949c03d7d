#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Warm Planner
연속 추론 모드: 콜드 추론 중 little 코어의 유휴 구간에
웜 추론 최적 커널의 준비 번들을 끼워 넣고, 두 번째/세 번째 추론 지연 시간을 계산
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple

from collectors.candidate_filter import VariantScore, warm_optimal_variant
from collectors.operation_graph import (
    OperationGraph, OperationKind, OperationNode, build_operation_graph, prep_nodes
)
from collectors.profile_model import ModelProfile
from config import Config
from processors.scheduler import KernelScheduler, Plan
from processors.simulator import ColdInferenceSimulator, PlatformConfig, SimReport, little_core

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExtraPrep:
    """콜드 추론 유휴 구간에 배치된 웜 커널 준비 번들"""
    layer_index: int
    variant: VariantScore
    core: str
    start_ms: float
    end_ms: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            'layer': self.layer_index,
            'kernel': self.variant.kernel_id,
            'cached': self.variant.cached,
            'core': self.core,
            'start_ms': round(self.start_ms, 6),
            'end_ms': round(self.end_ms, 6),
        }


@dataclass(frozen=True)
class WarmSwitchPlan:
    k_cold: Tuple[VariantScore, ...]
    k_warm: Tuple[VariantScore, ...]
    extra_preps: Tuple[ExtraPrep, ...] = ()
    residual: Tuple[int, ...] = ()

    @property
    def switch_layers(self) -> List[int]:
        """웜 커널이 콜드 커널과 다른 레이어"""
        return [warm.layer_index for cold, warm in zip(self.k_cold, self.k_warm)
                if cold.kernel_id != warm.kernel_id]

    @property
    def warm_execute_ms(self) -> float:
        return sum(score.exec_ms for score in self.k_warm)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'k_cold': [{'layer': s.layer_index, 'kernel': s.kernel_id, 'cached': s.cached} for s in self.k_cold],
            'k_warm': [{'layer': s.layer_index, 'kernel': s.kernel_id, 'cached': s.cached} for s in self.k_warm],
            'extra_preps': [prep.to_dict() for prep in self.extra_preps],
            'residual': list(self.residual),
        }


@dataclass
class _Window:
    core: str
    start_ms: float
    end_ms: float


class WarmSwitchPlanner:
    """웜 커널 전환 계획 클래스"""

    def __init__(self, config: Config = None, simulator: ColdInferenceSimulator = None,
                 scheduler: KernelScheduler = None):
        self.config = config or Config()
        self.simulator = simulator or ColdInferenceSimulator(self.config)
        self.scheduler = scheduler or KernelScheduler(self.config, simulator=self.simulator)
        self.tolerance = 1e-6

    def idle_windows(self, report: SimReport, platform: PlatformConfig) -> List[_Window]:
        """
        콜드 타임라인에서 little 코어별 유휴 구간 (0 ~ makespan)

        Returns:
            시작 시각, 코어 번호 순으로 정렬된 구간
        """
        windows = []
        for j in range(1, platform.little_cores + 1):
            core = little_core(j)
            cursor = 0.0
            for item in sorted((e for e in report.timeline if e.core == core), key=lambda e: e.start_ms):
                if item.start_ms - cursor > self.tolerance:
                    windows.append(_Window(core, cursor, item.start_ms))
                cursor = max(cursor, item.end_ms)
            if report.makespan_ms - cursor > self.tolerance:
                windows.append(_Window(core, cursor, report.makespan_ms))
        windows.sort(key=lambda w: (w.start_ms, int(w.core[len('little'):])))
        return windows

    def _extra_nodes(self, graph: OperationGraph, placed: Sequence[Tuple[int, VariantScore]],
                     shader_cache: bool) -> List[List[OperationNode]]:
        setup_precursors = {}
        for op_id in graph.setup_ops():
            kind = OperationKind.READ if graph.nodes[op_id].label == 'alloc' else OperationKind.PIPELINE_CREATE
            setup_precursors[kind] = [op_id]

        bundles = []
        next_id = len(graph.nodes)
        for layer, score in placed:
            nodes = prep_nodes(layer, score.variant, graph.mode, next_id, setup_precursors, shader_cache)
            # 웜 준비 노드는 레이어 번호를 음수로 표시해 콜드 번들과 구분
            nodes = [OperationNode(n.op_id, -layer, n.kind, n.resource_class, n.duration_ms,
                                   n.precursors, f"warm-{n.label}", n.shader_hit_ms) for n in nodes]
            bundles.append(nodes)
            next_id += len(nodes)
        return bundles

    def _inject(self, cold_plan: Plan, cold_report: SimReport, graph: OperationGraph,
                placements: Sequence[Tuple[int, VariantScore, str, float]], platform: PlatformConfig,
                shader_cache: bool) -> Tuple[OperationGraph, SimReport, List[List[int]]]:
        bundles = self._extra_nodes(graph, [(layer, score) for layer, score, _, _ in placements], shader_cache)
        extended = graph.extended([node for bundle in bundles for node in bundle])

        little = [list(queue) for queue in cold_plan.little_queues]
        while len(little) < platform.little_cores:
            little.append([])
        ends = {item.op_id: item.end_ms for item in cold_report.timeline}
        # 같은 코어의 번들은 시작 시각 순으로 넣어야 앞선 웜 번들 뒤에 자리 잡는다
        ordered = sorted(zip(placements, bundles), key=lambda pair: (pair[0][2], pair[0][3]))
        for (_, _, core, at_ms), bundle in ordered:
            queue = little[int(core[len('little'):]) - 1]
            position = 0
            for k, op in enumerate(queue):
                if op in ends and ends[op] > at_ms + self.tolerance:
                    break
                position = k + 1
            queue[position:position] = [node.op_id for node in bundle]

        report = self.simulator.run(cold_plan.big_queue, little, extended, platform.without_load())
        return extended, report, [[node.op_id for node in bundle] for bundle in bundles]

    def _undisturbed(self, cold_report: SimReport, report: SimReport) -> bool:
        ends = {item.op_id: item.end_ms for item in report.timeline}
        return all(abs(ends[item.op_id] - item.end_ms) <= self.tolerance for item in cold_report.timeline)

    def plan_warm_switch(self, cold_plan: Plan, cold_report: SimReport, profile: ModelProfile,
                         platform: PlatformConfig, shader_cache: bool = False,
                         allow_cache: bool = True) -> WarmSwitchPlan:
        """
        웜 커널 전환 계획

        웜 커널이 다른 레이어의 준비 번들을 little 준비 시간 내림차순(first-fit-decreasing)으로
        유휴 구간에 배치하고, 재시뮬레이션으로 콜드 연산 종료 시각이 바뀌지 않는지 확인한다.

        Args:
            cold_plan: 콜드 추론 계획
            cold_report: cold_plan 의 시뮬레이션 결과
            profile: 모델 프로파일
            platform: 플랫폼 구성
            shader_cache: GPU shader 캐시 사용 여부
            allow_cache: 웜 커널의 캐시 변형 허용 여부

        Returns:
            WarmSwitchPlan
        """
        k_cold = tuple(cold_plan.combo)
        k_warm = tuple(
            warm_optimal_variant(layer, profile.mode, cold, allow_cache, shader_cache, self.config)
            for layer, cold in zip(profile.layers, k_cold)
        )
        switch = [warm for cold, warm in zip(k_cold, k_warm) if cold.kernel_id != warm.kernel_id]
        if not switch:
            logger.info("웜 커널 = 콜드 커널: 전환 불필요")
            return WarmSwitchPlan(k_cold, k_warm)

        graph = build_operation_graph(profile, [score.variant for score in k_cold], shader_cache)
        if platform.has_load:
            # 유휴 구간은 부하 없는 콜드 타임라인 기준
            logger.warning("배경 부하가 있는 플랫폼: 부하 없는 콜드 타임라인으로 웜 전환 계획")
            cold_report = self.simulator.simulate(cold_plan, graph, platform.without_load())
        windows = self.idle_windows(cold_report, platform)
        ordered = sorted(switch, key=lambda s: (-s.prep_little_ms, s.layer_index))

        accepted: List[Tuple[int, VariantScore, str, float]] = []
        residual: List[int] = []
        for score in ordered:
            placed = False
            for window in windows:
                if window.end_ms - window.start_ms < score.prep_little_ms - self.tolerance:
                    continue
                trial = accepted + [(score.layer_index, score, window.core, window.start_ms)]
                _, report, bundle_ids = self._inject(cold_plan, cold_report, graph, trial, platform, shader_cache)
                last = report.entry(bundle_ids[-1][-1])
                if self._undisturbed(cold_report, report) and last.end_ms <= window.end_ms + self.tolerance:
                    accepted = trial
                    window.start_ms = last.end_ms
                    placed = True
                    break
            if not placed:
                logger.warning(f"레이어 {score.layer_index} 웜 준비가 유휴 구간에 맞지 않음: 두 번째 추론으로 이월")
                residual.append(score.layer_index)

        extra = []
        if accepted:
            _, report, bundle_ids = self._inject(cold_plan, cold_report, graph, accepted, platform, shader_cache)
            for (layer, score, core, _), ids in zip(accepted, bundle_ids):
                first, last = report.entry(ids[0]), report.entry(ids[-1])
                extra.append(ExtraPrep(layer, score, core, first.start_ms, last.end_ms))

        extra.sort(key=lambda prep: prep.layer_index)
        logger.info(f"웜 전환 계획: 전환 {len(switch)}개 레이어, 유휴 구간 배치 {len(extra)}개, 이월 {len(residual)}개")
        return WarmSwitchPlan(k_cold, k_warm, tuple(extra), tuple(sorted(residual)))

    def second_inference_latency(self, wsp: WarmSwitchPlan, profile: ModelProfile, platform: PlatformConfig,
                                 shader_cache: bool = False) -> float:
        """
        두 번째 추론 지연 시간

        이월된 레이어가 없으면 웜 Execute 합, 있으면 이월 레이어만 준비 번들을 갖는
        축소 파이프라인을 배치/시뮬레이션한 makespan.
        """
        if not wsp.residual:
            return wsp.warm_execute_ms
        graph = build_operation_graph(profile, [score.variant for score in wsp.k_warm], shader_cache,
                                      prep_layers=wsp.residual, include_setup=False)
        plan = self.scheduler.schedule_combination(graph, wsp.k_warm, platform)
        return plan.predicted_makespan_ms

    def third_inference_latency(self, wsp: WarmSwitchPlan) -> float:
        """세 번째 이후 추론: 모든 전환 완료, 웜 Execute 합"""
        return wsp.warm_execute_ms
