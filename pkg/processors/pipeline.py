#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Main Pipeline
프로파일 로드 → 계획 생성 → 시뮬레이션 → (연속 추론 시) 웜 전환 계획 전체 파이프라인과
단계별 기여도 분석(ablation)
"""

import logging
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Any, Dict, FrozenSet, List, Optional, Tuple

from collectors.candidate_filter import default_combo, score_variant, sequential_best_combo
from collectors.operation_graph import OperationGraph, build_operation_graph
from collectors.profile_loader import ProfileLoader
from collectors.profile_model import ExecutionMode, ModelProfile
from config import Config
from processors.oracle import sequential_baseline
from processors.scheduler import KernelScheduler, Plan, SchedulerConfig
from processors.simulator import ColdInferenceSimulator, PlatformConfig, SimReport
from processors.warm_planner import WarmSwitchPlan, WarmSwitchPlanner

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AblationConfig:
    """
    켜진 기법 집합

    K: 커널 선택, C: 변환 가중치(와 shader) 캐싱, P: 실행 파이프라인
    """
    stages: FrozenSet[str] = frozenset()

    @property
    def label(self) -> str:
        if not self.stages:
            return 'baseline'
        return '+'.join(stage for stage in 'KCP' if stage in self.stages)


ABLATION_ROWS = (
    AblationConfig(frozenset()),
    AblationConfig(frozenset('K')),
    AblationConfig(frozenset('KC')),
    AblationConfig(frozenset('KCP')),
)


class ColdInferencePipeline:
    """콜드 추론 스케줄링 전체 파이프라인 클래스"""

    def __init__(self, config: Config = None, platform: PlatformConfig = None,
                 scheduler_config: SchedulerConfig = None, lenient: bool = False):
        """
        파이프라인 초기화

        Args:
            config: 설정 객체
            platform: 플랫폼 구성 (None 이면 config 에서 생성)
            scheduler_config: 스케줄러 설정 (None 이면 config 에서 생성)
            lenient: 프로파일의 알려지지 않은 필드 허용 여부
        """
        self.config = config or Config()
        self.platform = platform or PlatformConfig.from_config(self.config)
        self.loader = ProfileLoader(lenient=lenient)
        self.simulator = ColdInferenceSimulator(self.config)
        self.scheduler = KernelScheduler(self.config, scheduler_config, self.simulator)
        self.warm_planner = WarmSwitchPlanner(self.config, self.simulator, self.scheduler)

        # 파이프라인 통계
        self.pipeline_stats = {
            'start_time': None,
            'end_time': None,
            'stage_times': {},
            'errors': [],
        }

    def _log_stage_start(self, stage_name: str):
        """단계 시작 로깅"""
        logger.info(f"===== {stage_name} 시작 =====")
        self.pipeline_stats['stage_times'][stage_name + '_start'] = datetime.now(timezone.utc)

    def _log_stage_end(self, stage_name: str, detail: str):
        """단계 완료 로깅"""
        start_time = self.pipeline_stats['stage_times'][stage_name + '_start']
        duration = (datetime.now(timezone.utc) - start_time).total_seconds()
        self.pipeline_stats['stage_times'][stage_name + '_duration'] = duration
        logger.info(f"===== {stage_name} 완료: {detail}, {duration:.2f}초 =====")

    def step1_load_profile(self, path: str) -> ModelProfile:
        """1단계: 프로파일 파일 로드 및 검증"""
        self._log_stage_start("프로파일 로드")
        try:
            profile = self.loader.load_file(path)
        except Exception as e:
            self.pipeline_stats['errors'].append(f"프로파일 로드 실패: {e}")
            raise
        self._log_stage_end("프로파일 로드", f"{profile.model_name}, N={profile.n_layers}")
        return profile

    def step2_generate_plan(self, profile: ModelProfile, allow_cache: bool = True,
                            shader_cache: bool = False) -> Plan:
        """2단계: 커널 조합 선택과 코어 배치"""
        self._log_stage_start("계획 생성")
        try:
            plan = self.scheduler.generate_plan(profile, self.platform, allow_cache, shader_cache)
        except Exception as e:
            self.pipeline_stats['errors'].append(f"계획 생성 실패: {e}")
            raise
        self._log_stage_end("계획 생성", f"예측 {plan.predicted_makespan_ms:.3f}ms")
        return plan

    def build_graph(self, profile: ModelProfile, plan: Plan, shader_cache: bool = False) -> OperationGraph:
        return build_operation_graph(profile, [score.variant for score in plan.combo], shader_cache)

    def step3_simulate(self, profile: ModelProfile, plan: Plan, shader_cache: bool = False,
                       stealing: bool = False) -> Tuple[OperationGraph, SimReport]:
        """
        3단계: 계획 시뮬레이션

        배경 부하가 있으면 부하/stealing 을 적용하고, GPU 프로파일이면 GPU 모드로 실행한다.
        """
        self._log_stage_start("시뮬레이션")
        graph = self.build_graph(profile, plan, shader_cache)
        if profile.mode is ExecutionMode.GPU:
            report = self.simulator.simulate_gpu(plan, graph, self.platform, shader_cache, stealing)
        elif self.platform.background_load:
            report = self.simulator.simulate_with_load(plan, graph, self.platform, stealing)
        else:
            report = self.simulator.simulate(plan, graph, self.platform)

        violations = self.simulator.validate_feasibility(report, graph, self.platform)
        if violations:
            # 시뮬레이터 자체 검사 실패는 스케줄러/시뮬레이터 버그
            for violation in violations:
                logger.error(f"제약 위반: {violation}")
            self.pipeline_stats['errors'].append(f"제약 위반 {len(violations)}건")
        self._log_stage_end("시뮬레이션", f"makespan {report.makespan_ms:.3f}ms, steal {len(report.steals)}회")
        return graph, report

    def step4_warm_switch(self, profile: ModelProfile, plan: Plan, report: SimReport,
                          allow_cache: bool = True, shader_cache: bool = False) -> Dict[str, Any]:
        """4단계: 연속 추론용 웜 커널 전환 계획과 지연 시간"""
        self._log_stage_start("웜 전환 계획")
        wsp = self.warm_planner.plan_warm_switch(plan, report, profile, self.platform, shader_cache, allow_cache)
        second = self.warm_planner.second_inference_latency(wsp, profile, self.platform, shader_cache)
        third = self.warm_planner.third_inference_latency(wsp)
        self._log_stage_end("웜 전환 계획", f"두 번째 {second:.3f}ms, 세 번째 {third:.3f}ms")
        return {
            'warm_switch': wsp.to_dict(),
            'first_inference_ms': round(report.makespan_ms, 6),
            'second_inference_ms': round(second, 6),
            'third_inference_ms': round(third, 6),
        }

    def run_plan(self, path: str, allow_cache: bool = True, shader_cache: bool = False,
                 continuous: bool = False, stealing: bool = False) -> Dict[str, Any]:
        """
        전체 파이프라인 실행: 로드 → 계획 → 시뮬레이션 → (웜 전환)

        Returns:
            plan / report / (warm) 을 담은 결과
        """
        logger.info("콜드 추론 스케줄링 파이프라인 시작")
        self.pipeline_stats['start_time'] = datetime.now(timezone.utc)
        try:
            profile = self.step1_load_profile(path)
            plan = self.step2_generate_plan(profile, allow_cache, shader_cache)
            graph, report = self.step3_simulate(profile, plan, shader_cache, stealing)
            result = {'profile': profile, 'plan': plan, 'graph': graph, 'report': report}
            if continuous:
                result['warm'] = self.step4_warm_switch(profile, plan, report, allow_cache, shader_cache)
            return result
        finally:
            self.pipeline_stats['end_time'] = datetime.now(timezone.utc)

    def ablation_makespan(self, profile: ModelProfile, ablation: AblationConfig) -> float:
        """
        기법 조합 하나의 콜드 추론 시간

        P 가 없으면 순차 실행(sequential_baseline), P 가 있으면 계획 시뮬레이션 값.
        """
        cache = 'C' in ablation.stages
        shader_cache = cache and profile.mode is ExecutionMode.GPU

        if 'K' in ablation.stages:
            if 'P' in ablation.stages:
                return self.scheduler.generate_plan(profile, self.platform, cache, shader_cache).predicted_makespan_ms
            combo = sequential_best_combo(profile, cache, shader_cache, self.config)
        else:
            combo = default_combo(profile, shader_cache)
            if cache:
                combo = [score_variant(s.layer_index, s.variant.as_cached(), profile.mode, shader_cache)
                         if s.variant.has_transform else s for s in combo]
            if 'P' in ablation.stages:
                graph = build_operation_graph(profile, [s.variant for s in combo], shader_cache)
                return self.scheduler.schedule_combination(graph, combo, self.platform).predicted_makespan_ms
        return sequential_baseline(profile, combo)

    def run_ablation(self, profile: ModelProfile,
                     rows: Optional[List[AblationConfig]] = None) -> List[Dict[str, Any]]:
        """
        baseline / K / K+C / K+C+P 순서의 makespan 표

        Returns:
            [{'config': 'K', 'makespan_ms': ...}, ...]
        """
        self._log_stage_start("ablation")
        table = []
        for ablation in rows or ABLATION_ROWS:
            makespan = self.ablation_makespan(profile, ablation)
            table.append({'config': ablation.label, 'makespan_ms': round(makespan, 6)})
            logger.info(f"{ablation.label:>8}: {makespan:.3f}ms")
        self._log_stage_end("ablation", f"{len(table)}개 구성")
        return table

    def get_pipeline_stats(self) -> Dict[str, Any]:
        """파이프라인 통계 (소요 시간 포함)"""
        stats = dict(self.pipeline_stats)
        if stats['start_time'] and stats['end_time']:
            stats['total_duration'] = (stats['end_time'] - stats['start_time']).total_seconds()
        return stats
