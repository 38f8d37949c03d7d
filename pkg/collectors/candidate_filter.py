#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Candidate Filter
레이어별 커널 × 캐시 변형을 나열하고 파레토 지배되는 변형을 제거
(준비 시간과 실행 시간 어느 쪽도 빠르지 않은 후보는 제외)
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from collectors.profile_model import ExecutionMode, KernelVariant, LayerSpec, ModelProfile, ProcessorClass
from config import Config

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VariantScore:
    """스케줄러가 보는 변형 하나의 요약 비용"""
    layer_index: int
    variant: KernelVariant
    prep_little_ms: float
    prep_big_ms: float
    exec_ms: float

    @property
    def kernel_id(self) -> str:
        return self.variant.kernel_id

    @property
    def cached(self) -> bool:
        return self.variant.cached

    def to_dict(self) -> Dict[str, Any]:
        return {
            'layer': self.layer_index,
            'kernel': self.kernel_id,
            'cached': self.cached,
            'prep_little_ms': round(self.prep_little_ms, 6),
            'prep_big_ms': round(self.prep_big_ms, 6),
            'exec_ms': round(self.exec_ms, 6),
        }


def score_variant(layer_index: int, variant: KernelVariant, mode: ExecutionMode,
                  shader_cache: bool = False) -> VariantScore:
    """
    변형의 준비/실행 시간 계산

    GPU 모드에서는 준비 번들에 pipeline 생성 비용이 포함된다.
    """
    pipeline = variant.pipeline_create_on(shader_cache) if mode is ExecutionMode.GPU else 0.0
    return VariantScore(
        layer_index=layer_index,
        variant=variant,
        prep_little_ms=variant.prep_on(ProcessorClass.LITTLE) + pipeline,
        prep_big_ms=variant.prep_on(ProcessorClass.BIG) + pipeline,
        exec_ms=variant.execute_on(mode.execute_class),
    )


class CandidateFilter:
    """커널 후보 필터링 클래스"""

    def __init__(self, config: Config = None, mode: ExecutionMode = ExecutionMode.CPU,
                 allow_cache: bool = True, shader_cache: bool = False):
        """
        후보 필터 초기화

        Args:
            config: 설정 객체
            mode: CPU/GPU 모드
            allow_cache: 변환 결과 캐싱 변형 허용 여부 (--no-cache 이면 False)
            shader_cache: GPU shader 캐시 사용 여부
        """
        self.config = config or Config()
        self.mode = mode
        self.allow_cache = allow_cache
        self.shader_cache = shader_cache
        self.tolerance = self.config.TIME_TOLERANCE_MS

    def enumerate_variants(self, layer: LayerSpec) -> List[VariantScore]:
        """
        레이어의 커널 × 캐시 변형 나열 (최대 2·c_i 개)

        변환 비용이 0 인 커널은 캐시 쌍둥이가 원본과 같으므로 생략한다.

        Args:
            layer: 레이어 명세

        Returns:
            선언 순서의 변형 목록 (커널마다 원본, 캐시 순)
        """
        variants = []
        for kernel in layer.candidates:
            variants.append(score_variant(layer.layer_index, kernel, self.mode, self.shader_cache))
            if self.allow_cache and kernel.has_transform:
                variants.append(score_variant(layer.layer_index, kernel.as_cached(), self.mode, self.shader_cache))
        return variants

    def _dominates(self, a: VariantScore, b: VariantScore) -> bool:
        tol = self.tolerance
        no_worse = a.prep_little_ms <= b.prep_little_ms + tol and a.exec_ms <= b.exec_ms + tol
        better = a.prep_little_ms < b.prep_little_ms - tol or a.exec_ms < b.exec_ms - tol
        return no_worse and better

    def _same_cost(self, a: VariantScore, b: VariantScore) -> bool:
        tol = self.tolerance
        return abs(a.prep_little_ms - b.prep_little_ms) <= tol and abs(a.exec_ms - b.exec_ms) <= tol

    def prune_dominated(self, variants: Sequence[VariantScore]) -> List[VariantScore]:
        """
        (little 코어 준비 시간, 실행 시간) 기준 파레토 프런트 계산

        동일 비용 변형은 먼저 선언된 것만 남기고, 출력 순서는 입력 순서를 따른다.

        Args:
            variants: 비어 있지 않은 변형 목록

        Returns:
            지배되지 않는 변형 목록
        """
        if not variants:
            raise ValueError("prune_dominated needs at least one variant")

        front = []
        for i, candidate in enumerate(variants):
            dominated = False
            for j, other in enumerate(variants):
                if i == j:
                    continue
                if self._dominates(other, candidate) or (j < i and self._same_cost(other, candidate)):
                    dominated = True
                    break
            if not dominated:
                front.append(candidate)
        return front

    def layer_front(self, layer: LayerSpec) -> List[VariantScore]:
        return self.prune_dominated(self.enumerate_variants(layer))

    def fronts(self, profile: ModelProfile) -> List[List[VariantScore]]:
        """
        모든 레이어의 파레토 프런트

        Returns:
            레이어 순서의 프런트 목록
        """
        fronts = [self.layer_front(layer) for layer in profile.layers]
        stats = self.analyze_fronts(profile, fronts)
        logger.info(f"후보 필터링 완료: 변형 {stats['total_variants']}개 → {stats['front_variants']}개, "
                    f"조합 수 {stats['combination_count']}")
        return fronts

    def analyze_fronts(self, profile: ModelProfile, fronts: List[List[VariantScore]]) -> Dict[str, Any]:
        """필터링 결과 분석"""
        total = sum(len(self.enumerate_variants(layer)) for layer in profile.layers)
        combinations = 1
        for front in fronts:
            combinations *= len(front)
        sizes = [len(front) for front in fronts]
        return {
            'total_variants': total,
            'front_variants': sum(sizes),
            'max_front_size': max(sizes) if sizes else 0,
            'combination_count': combinations,
        }


def default_combo(profile: ModelProfile, shader_cache: bool = False) -> List[VariantScore]:
    """레이어마다 처음 선언된 커널 (기본 엔진의 선택, 캐시 없음)"""
    return [score_variant(layer.layer_index, layer.candidates[0], profile.mode, shader_cache)
            for layer in profile.layers]


def sequential_best_combo(profile: ModelProfile, allow_cache: bool,
                          shader_cache: bool = False, config: Config = None) -> List[VariantScore]:
    """
    파이프라인 없이 순차 실행할 때 레이어별 최적 변형

    big 클러스터 준비 시간 + 실행 시간이 최소인 변형 (동률이면 선언 순서)
    """
    candidate_filter = CandidateFilter(config, profile.mode, allow_cache, shader_cache)
    tol = candidate_filter.tolerance
    combo = []
    for layer in profile.layers:
        best: Optional[VariantScore] = None
        for score in candidate_filter.enumerate_variants(layer):
            total = score.prep_big_ms + score.exec_ms
            if best is None or total < best.prep_big_ms + best.exec_ms - tol:
                best = score
        combo.append(best)
    return combo


def warm_optimal_variant(layer: LayerSpec, mode: ExecutionMode, cold_choice: VariantScore,
                         allow_cache: bool = True, shader_cache: bool = False,
                         config: Config = None) -> VariantScore:
    """
    웜 추론 최적 변형 (실행 시간 최소)

    동률이면 콜드 선택을 유지하고, 그 다음은 little 준비 시간이 짧은 것, 선언 순서 순.
    """
    candidate_filter = CandidateFilter(config, mode, allow_cache, shader_cache)
    tol = candidate_filter.tolerance
    variants = candidate_filter.enumerate_variants(layer)
    fastest = min(score.exec_ms for score in variants)
    tied = [score for score in variants if score.exec_ms <= fastest + tol]

    for score in tied:
        if score.kernel_id == cold_choice.kernel_id:
            return cold_choice
    best = tied[0]
    for score in tied[1:]:
        if score.prep_little_ms < best.prep_little_ms - tol:
            best = score
    return best
