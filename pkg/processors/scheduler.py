#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Kernel Scheduler
커널 조합을 탐색하고, 조합마다 준비 번들을 big 클러스터와 little 코어에
균형 있게 배치하여 콜드 추론 완료 시간이 가장 짧은 계획을 선택
"""

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Any, Dict, List, Optional, Sequence, Tuple

from collectors.candidate_filter import CandidateFilter, VariantScore
from collectors.operation_graph import OperationGraph, build_operation_graph
from collectors.profile_model import ExecutionMode, ModelProfile, ProcessorClass
from config import Config
from exceptions import ComboSpaceExceeded, ValidationError
from processors.simulator import ColdInferenceSimulator, PlatformConfig

logger = logging.getLogger(__name__)


class ComboStrategy(Enum):
    EXHAUSTIVE = 'exhaustive'
    GREEDY = 'greedy'
    BEAM = 'beam'


def parse_strategy(text: str) -> Tuple[ComboStrategy, Optional[int]]:
    """
    'exhaustive' | 'greedy' | 'beam' | 'beam:K' 파싱

    Returns:
        (전략, beam 폭 또는 None)
    """
    name, _, width = text.strip().lower().partition(':')
    try:
        strategy = ComboStrategy(name)
    except ValueError:
        raise ValidationError(f"unknown combo strategy '{text}'") from None
    if width:
        if strategy is not ComboStrategy.BEAM or not width.isdigit() or int(width) < 1:
            raise ValidationError(f"invalid combo strategy '{text}'")
        return strategy, int(width)
    return strategy, None


@dataclass(frozen=True)
class SchedulerConfig:
    """균형 루프와 조합 탐색 설정"""
    epsilon_ms: Optional[float] = None          # None 이면 max(floor, ratio × 현재 최대 큐 시간)
    epsilon_floor_ms: float = 0.1
    epsilon_ratio: float = 0.01
    max_balance_iters: Optional[int] = None     # None 이면 16·N
    balance_iters_per_layer: int = 16
    combo_strategy: ComboStrategy = ComboStrategy.EXHAUSTIVE
    combo_cap: int = 4096
    beam_width: int = 8
    strict_insertion: bool = False
    workers: int = 1

    def __post_init__(self):
        if self.epsilon_ms is not None and not self.epsilon_ms > 0:
            raise ValidationError("epsilon_ms must be > 0")
        if not self.epsilon_floor_ms > 0:
            raise ValidationError("epsilon_floor_ms must be > 0")
        if self.combo_cap < 1:
            raise ValidationError("combo_cap must be >= 1")
        if self.beam_width < 1:
            raise ValidationError("beam_width must be >= 1")

    @classmethod
    def from_config(cls, config: Config = None, **overrides) -> 'SchedulerConfig':
        """설정 클래스에서 스케줄러 설정 생성"""
        config = config or Config()
        strategy, width = parse_strategy(config.COMBO_STRATEGY)
        values = {
            'epsilon_floor_ms': config.EPSILON_FLOOR_MS,
            'epsilon_ratio': config.EPSILON_RATIO,
            'balance_iters_per_layer': config.BALANCE_ITERS_PER_LAYER,
            'combo_strategy': strategy,
            'combo_cap': config.COMBO_CAP,
            'beam_width': width or config.BEAM_WIDTH,
            'strict_insertion': config.STRICT_INSERTION,
            'workers': config.PLAN_WORKERS,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    def epsilon(self, current_max_ms: float) -> float:
        if self.epsilon_ms is not None:
            return self.epsilon_ms
        return max(self.epsilon_floor_ms, self.epsilon_ratio * current_max_ms)

    def iteration_cap(self, n_layers: int) -> int:
        if self.max_balance_iters is not None:
            return self.max_balance_iters
        return self.balance_iters_per_layer * max(1, n_layers)


@dataclass(frozen=True)
class Plan:
    """
    선택된 커널 조합과 코어별 연산 큐

    big_queue 는 Q_0 (big 클러스터, GPU 모드에서는 Execute 가 GPU 로 분리됨),
    little_queues 는 Q_1..Q_{M_l}.
    """
    combo: Tuple[VariantScore, ...]
    big_queue: Tuple[int, ...]
    little_queues: Tuple[Tuple[int, ...], ...]
    predicted_makespan_ms: float = 0.0
    storage_overhead_bytes: int = 0
    mode: ExecutionMode = ExecutionMode.CPU
    balance_converged: bool = True

    def with_makespan(self, makespan_ms: float) -> 'Plan':
        return replace(self, predicted_makespan_ms=makespan_ms)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'combo': [
                {'layer': score.layer_index, 'kernel': score.kernel_id, 'cached': score.cached}
                for score in self.combo
            ],
            'queues': {
                'big': list(self.big_queue),
                'little': [list(queue) for queue in self.little_queues],
            },
            'predicted_makespan_ms': round(self.predicted_makespan_ms, 6),
            'storage_overhead_bytes': self.storage_overhead_bytes,
            'mode': self.mode.value,
            'balance_converged': self.balance_converged,
        }


def storage_overhead(combo: Sequence[VariantScore]) -> int:
    return sum(score.variant.storage_overhead_bytes for score in combo)


def layout_plan(graph: OperationGraph, combo: Sequence[VariantScore], big_layers: Sequence[int],
                little_layers: Sequence[Sequence[int]], converged: bool = True,
                big_order: Optional[Sequence[int]] = None) -> Plan:
    """
    레이어 배치로부터 Plan 생성

    Q_0 = setup → big_layers 의 준비 번들 → Execute
    (big_order 가 주어지면 setup 뒤를 그 순서 그대로 사용)
    """
    big = list(graph.setup_ops())
    if big_order is None:
        for layer in big_layers:
            big.extend(graph.bundle(layer))
        big.extend(graph.execute_ops())
    else:
        big.extend(big_order)
    little = tuple(tuple(op for layer in layers for op in graph.bundle(layer)) for layers in little_layers)
    return Plan(
        combo=tuple(combo),
        big_queue=tuple(big),
        little_queues=little,
        storage_overhead_bytes=storage_overhead(combo),
        mode=graph.mode,
        balance_converged=converged,
    )


def sequential_plan(graph: OperationGraph, combo: Sequence[VariantScore], little_cores: int = 0) -> Plan:
    """기본 엔진 순서: setup, 모든 준비 번들(레이어 순), 모든 Execute 를 Q_0 하나에"""
    return layout_plan(graph, combo, graph.bundle_layers(), [[] for _ in range(little_cores)])


def compute_queue_time(queue: Sequence[int], cls: ProcessorClass, graph: OperationGraph) -> float:
    """큐의 공칭 시간 합 (의존성 대기는 무시)"""
    return sum(graph.nodes[op_id].duration_on(cls) for op_id in queue)


class KernelScheduler:
    """커널 스케줄러 클래스"""

    def __init__(self, config: Config = None, scheduler_config: SchedulerConfig = None,
                 simulator: ColdInferenceSimulator = None):
        """
        스케줄러 초기화

        Args:
            config: 설정 객체
            scheduler_config: 균형/탐색 설정 (None 이면 config 에서 생성)
            simulator: 계획 평가에 쓸 시뮬레이터
        """
        self.config = config or Config()
        self.cfg = scheduler_config or SchedulerConfig.from_config(self.config)
        self.simulator = simulator or ColdInferenceSimulator(self.config)
        self.tolerance = self.config.TIME_TOLERANCE_MS

    # ------------------------------------------------------------------
    # 조합 하나의 배치
    # ------------------------------------------------------------------

    def _bundle_time(self, graph: OperationGraph, layer: int, cls: ProcessorClass) -> float:
        return graph.bundle_duration(layer, cls)

    def _big_time(self, graph: OperationGraph, big_layers: Sequence[int]) -> float:
        setup = compute_queue_time(graph.setup_ops(), ProcessorClass.BIG, graph)
        preps = sum(self._bundle_time(graph, layer, ProcessorClass.BIG) for layer in big_layers)
        executes = compute_queue_time(graph.execute_ops(), graph.execute_class, graph)
        return setup + preps + executes

    def _little_times(self, graph: OperationGraph, queues: Sequence[Sequence[int]]) -> List[float]:
        return [sum(self._bundle_time(graph, layer, ProcessorClass.LITTLE) for layer in queue) for queue in queues]

    def _pick_insertion(self, graph: OperationGraph, candidates: Sequence[int], gap: float) -> Optional[int]:
        """
        Q_0 헤더로 옮길 준비 번들 선택

        (t^b + t^l) < gap 을 만족하는 첫 번들, 없으면 차이를 줄이는 첫 번들 (t^b + t^l < 2·gap)
        """
        costs = [(layer, self._bundle_time(graph, layer, ProcessorClass.BIG)
                  + self._bundle_time(graph, layer, ProcessorClass.LITTLE)) for layer in candidates]
        for layer, cost in costs:
            if cost < gap:
                return layer
        if self.cfg.strict_insertion:
            return None
        for layer, cost in costs:
            if cost < 2 * gap:
                return layer
        return None

    def _round_robin(self, layers: Sequence[int], little_cores: int) -> List[List[int]]:
        queues = [[] for _ in range(little_cores)]
        for position, layer in enumerate(sorted(layers)):
            queues[position % little_cores].append(layer)
        return queues

    def _balance_littles(self, graph: OperationGraph, queues: List[List[int]], cap: int) -> bool:
        """
        little 코어 간 준비 번들 이동 (가장 늦게 끝나는 큐 → 가장 빨리 끝나는 큐)

        Returns:
            반복 상한 이전에 수렴했으면 True
        """
        if len(queues) < 2:
            return True
        for _ in range(cap):
            times = self._little_times(graph, queues)
            j_max = max(range(len(times)), key=lambda j: (times[j], -j))
            j_min = min(range(len(times)), key=lambda j: (times[j], j))
            diff = times[j_max] - times[j_min]
            if diff <= self.cfg.epsilon(times[j_max]):
                return True

            ordered = sorted(queues[j_max],
                             key=lambda layer: (-self._bundle_time(graph, layer, ProcessorClass.LITTLE), layer))
            move = next((layer for layer in ordered
                         if self._bundle_time(graph, layer, ProcessorClass.LITTLE) < diff / 2), None)
            if move is None:
                return True
            queues[j_max].remove(move)
            queues[j_min].append(move)
            queues[j_min].sort()
        return False

    def balance(self, graph: OperationGraph, little_cores: int) -> Tuple[List[int], List[List[int]], bool]:
        """
        big 코어 루프 + little 코어 루프

        Returns:
            (Q_0 에 넣을 레이어, little 큐별 레이어, 수렴 여부)
        """
        layers = graph.bundle_layers()
        if not layers:
            return [], [[] for _ in range(little_cores)], True
        if little_cores == 0:
            return list(layers), [], True

        big_layers = [layers[0]]
        pending = list(layers[1:])
        little: Optional[List[List[int]]] = None
        cap = self.cfg.iteration_cap(graph.n_layers)
        converged = True

        for iteration in itertools.count(1):
            if iteration > cap:
                converged = False
                break
            if little is not None:
                big_time = self._big_time(graph, big_layers)
                little_max = max(self._little_times(graph, little))
                if abs(little_max - big_time) <= self.cfg.epsilon(max(big_time, little_max)):
                    break
                if little_max <= big_time:
                    break
                pick = self._pick_insertion(graph, pending, little_max - big_time)
                if pick is None:
                    break
                big_layers.append(pick)
                # 선택된 번들 이전의 후보는 다시 보지 않음
                pending = pending[pending.index(pick) + 1:]

            remaining = [layer for layer in layers if layer not in big_layers]
            little = self._round_robin(remaining, little_cores)
            if not self._balance_littles(graph, little, cap):
                converged = False

        if not converged:
            logger.warning(f"균형 루프 반복 상한({cap}) 도달: 수렴하지 않은 계획 반환")
        return big_layers, little, converged

    def schedule_combination(self, graph: OperationGraph, combo: Sequence[VariantScore],
                             platform: PlatformConfig) -> Plan:
        """
        조합 하나에 대한 배치 계획 생성

        균형 배치 계획과 순차 계획을 모두 시뮬레이션하여 더 빠른 쪽을 반환한다.

        Args:
            graph: combo 로 만든 연산 그래프
            combo: 레이어별 선택 변형
            platform: 플랫폼 구성

        Returns:
            predicted_makespan_ms 가 채워진 Plan
        """
        big_layers, little_layers, converged = self.balance(graph, platform.little_cores)
        balanced = layout_plan(graph, combo, big_layers, little_layers, converged)
        baseline = sequential_plan(graph, combo, platform.little_cores)

        quiet = platform.without_load()
        balanced_ms = self.simulator.simulate(balanced, graph, quiet).makespan_ms
        if balanced.big_queue == baseline.big_queue:
            return balanced.with_makespan(balanced_ms)
        baseline_ms = self.simulator.simulate(baseline, graph, quiet).makespan_ms
        if baseline_ms < balanced_ms - self.tolerance:
            logger.debug(f"순차 계획이 더 빠름: {baseline_ms:.3f}ms < {balanced_ms:.3f}ms")
            return replace(baseline, balance_converged=converged).with_makespan(baseline_ms)
        return balanced.with_makespan(balanced_ms)

    # ------------------------------------------------------------------
    # 조합 탐색
    # ------------------------------------------------------------------

    def evaluate(self, profile: ModelProfile, combo: Sequence[VariantScore], platform: PlatformConfig,
                 shader_cache: bool = False) -> Plan:
        graph = build_operation_graph(profile, [score.variant for score in combo], shader_cache)
        return self.schedule_combination(graph, combo, platform)

    def _better(self, plan: Plan, best: Optional[Plan]) -> bool:
        if best is None:
            return True
        if plan.predicted_makespan_ms < best.predicted_makespan_ms - self.tolerance:
            return True
        tied = abs(plan.predicted_makespan_ms - best.predicted_makespan_ms) <= self.tolerance
        return tied and plan.storage_overhead_bytes < best.storage_overhead_bytes

    def _select(self, plans: Sequence[Plan]) -> Plan:
        best = None
        for plan in plans:
            if self._better(plan, best):
                best = plan
        return best

    def greedy_combo(self, fronts: Sequence[Sequence[VariantScore]], little_cores: int) -> List[VariantScore]:
        """레이어마다 prep_little/M_l + exec (M_l = 0 이면 prep_big + exec) 최소 변형"""
        combo = []
        for front in fronts:
            def score(item: VariantScore) -> float:
                if little_cores == 0:
                    return item.prep_big_ms + item.exec_ms
                return item.prep_little_ms / little_cores + item.exec_ms
            best = front[0]
            for item in front[1:]:
                if score(item) < score(best) - self.tolerance:
                    best = item
            combo.append(best)
        return combo

    def _evaluate_all(self, profile: ModelProfile, combos: Sequence[Sequence[VariantScore]],
                      platform: PlatformConfig, shader_cache: bool) -> List[Plan]:
        if self.cfg.workers > 1 and len(combos) > 1:
            jobs = [(self.config, self.cfg, profile, tuple(combo), platform, shader_cache) for combo in combos]
            with ProcessPoolExecutor(max_workers=self.cfg.workers) as pool:
                return list(pool.map(_evaluate_job, jobs))
        return [self.evaluate(profile, combo, platform, shader_cache) for combo in combos]

    def _beam_search(self, profile: ModelProfile, fronts: Sequence[Sequence[VariantScore]],
                     platform: PlatformConfig, shader_cache: bool) -> Plan:
        # 접두사 뒤는 greedy 선택으로 채워 시뮬레이션 점수를 매김
        tail = self.greedy_combo(fronts, platform.little_cores)
        beam: List[Tuple[VariantScore, ...]] = [()]
        scored: List[Plan] = []
        for index, front in enumerate(fronts):
            prefixes = [prefix + (item,) for prefix in beam for item in front]
            combos = [list(prefix) + tail[index + 1:] for prefix in prefixes]
            plans = self._evaluate_all(profile, combos, platform, shader_cache)
            order = sorted(range(len(plans)), key=lambda k: (plans[k].predicted_makespan_ms,
                                                              plans[k].storage_overhead_bytes, k))
            keep = order[:self.cfg.beam_width]
            beam = [prefixes[k] for k in keep]
            scored = [plans[k] for k in keep]
        return self._select(scored)

    def generate_plan(self, profile: ModelProfile, platform: PlatformConfig, allow_cache: bool = True,
                      shader_cache: bool = False) -> Plan:
        """
        최적 커널 조합과 배치 계획 생성

        Args:
            profile: 모델 프로파일
            platform: 플랫폼 구성
            allow_cache: 변환 결과 캐시 변형 사용 여부
            shader_cache: GPU shader 캐시 사용 여부

        Returns:
            예측 makespan 이 가장 짧은 Plan (동률이면 저장 오버헤드가 작은 것, 그다음 선언 순서)

        Raises:
            ComboSpaceExceeded: exhaustive 전략에서 조합 수가 상한을 넘을 때
        """
        start = time.time()
        candidate_filter = CandidateFilter(self.config, profile.mode, allow_cache, shader_cache)
        fronts = candidate_filter.fronts(profile)
        strategy = self.cfg.combo_strategy

        if strategy is ComboStrategy.EXHAUSTIVE:
            count = math.prod(len(front) for front in fronts)
            if count > self.cfg.combo_cap:
                raise ComboSpaceExceeded(count, self.cfg.combo_cap)
            combos = [list(combo) for combo in itertools.product(*fronts)]
            best = self._select(self._evaluate_all(profile, combos, platform, shader_cache))
        elif strategy is ComboStrategy.GREEDY:
            best = self.evaluate(profile, self.greedy_combo(fronts, platform.little_cores), platform, shader_cache)
        else:
            best = self._beam_search(profile, fronts, platform, shader_cache)

        logger.info(f"계획 생성 완료 ({strategy.value}): 예측 {best.predicted_makespan_ms:.3f}ms, "
                    f"저장 오버헤드 {best.storage_overhead_bytes}B, {time.time() - start:.2f}초")
        return best


def _evaluate_job(job) -> Plan:
    config, cfg, profile, combo, platform, shader_cache = job
    return KernelScheduler(config, replace(cfg, workers=1)).evaluate(profile, combo, platform, shader_cache)
