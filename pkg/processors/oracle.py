#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Oracle
기준 값 계산: 파이프라인 없는 순차 실행 시간과, 작은 인스턴스의 최적 배치 (branch-and-bound)
"""

import itertools
import logging
import time
from dataclasses import dataclass
from typing import Dict, Iterator, Sequence, Tuple

from collectors.candidate_filter import VariantScore
from collectors.operation_graph import OperationGraph
from collectors.profile_model import ExecutionMode, ModelProfile, ProcessorClass
from config import Config
from exceptions import LimitsExceeded, ValidationError
from processors.scheduler import Plan, layout_plan, sequential_plan
from processors.simulator import ColdInferenceSimulator, PlatformConfig

logger = logging.getLogger(__name__)


def sequential_baseline(profile: ModelProfile, combo: Sequence[VariantScore]) -> float:
    """
    기본 엔진의 콜드 경로 (겹침 없음)

    setup + Σ(read + transform [+ pipeline]) + Σ execute, 준비는 big 클러스터 기준
    """
    setup = profile.setup.memory_alloc_ms
    if profile.mode is ExecutionMode.GPU:
        setup += profile.setup.gpu_driver_init_ms
    return setup + sum(score.prep_big_ms + score.exec_ms for score in combo)


@dataclass(frozen=True)
class OracleLimits:
    """탐색 가능 규모 제한"""
    max_ops: int = 12               # setup 을 제외한 연산 수
    max_cores: int = 3              # M_l + 1
    time_budget_ms: int = 10000
    permute_queues: bool = True     # False 이면 큐 안의 번들은 레이어 오름차순만 탐색

    def __post_init__(self):
        if self.max_ops < 1 or self.max_cores < 1 or self.time_budget_ms < 1:
            raise ValidationError("oracle limits must be >= 1")

    @classmethod
    def from_config(cls, config: Config = None, **overrides) -> 'OracleLimits':
        config = config or Config()
        values = {
            'max_ops': config.ORACLE_MAX_OPS,
            'max_cores': config.ORACLE_MAX_CORES,
            'time_budget_ms': config.ORACLE_TIME_BUDGET_MS,
            'permute_queues': config.ORACLE_PERMUTE_QUEUES,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)


@dataclass(frozen=True)
class OracleResult:
    plan: Plan
    makespan_ms: float
    optimal: bool
    explored: int


class ScheduleOracle:
    """최적 배치 탐색 클래스"""

    def __init__(self, config: Config = None, simulator: ColdInferenceSimulator = None):
        self.config = config or Config()
        self.simulator = simulator or ColdInferenceSimulator(self.config)
        self.tolerance = self.config.TIME_TOLERANCE_MS

    def _check_limits(self, graph: OperationGraph, platform: PlatformConfig, limits: OracleLimits):
        ops = len(graph.nodes) - len(graph.setup_ops())
        if ops > limits.max_ops:
            raise LimitsExceeded(f"{ops} operations exceed the oracle limit of {limits.max_ops}")
        if platform.little_cores + 1 > limits.max_cores:
            raise LimitsExceeded(f"{platform.little_cores + 1} cores exceed the oracle limit of {limits.max_cores}")

    def _big_orders(self, graph: OperationGraph, big_layers: Sequence[int],
                    permute: bool) -> Iterator[Tuple[int, ...]]:
        """
        Q_0 의 준비 번들과 Execute 병합 순서 나열

        Execute 는 레이어 순서 고정, 레이어 i 의 번들은 e_i 보다 앞.
        GPU 모드에서는 Execute 가 별도 레인이므로 번들 순서만 의미가 있다.
        """
        executes = graph.execute_ops()
        exec_layers = [graph.nodes[op].layer_index for op in executes]
        prep_orders = itertools.permutations(big_layers) if permute else [tuple(big_layers)]

        for preps in prep_orders:
            if graph.mode is ExecutionMode.GPU:
                yield tuple(op for layer in preps for op in graph.bundle(layer)) + tuple(executes)
                continue

            def merge(i: int, k: int, placed: frozenset) -> Iterator[Tuple[int, ...]]:
                if i == len(preps) and k == len(executes):
                    yield ()
                    return
                if i < len(preps):
                    for rest in merge(i + 1, k, placed | {preps[i]}):
                        yield graph.bundle(preps[i]) + rest
                if k < len(executes):
                    layer = exec_layers[k]
                    if layer not in big_layers or layer in placed:
                        for rest in merge(i, k + 1, placed):
                            yield (executes[k],) + rest

            yield from merge(0, 0, frozenset())

    def _little_orders(self, little_layers: Sequence[Sequence[int]],
                       permute: bool) -> Iterator[Tuple[Tuple[int, ...], ...]]:
        if not permute:
            yield tuple(tuple(layers) for layers in little_layers)
            return
        yield from itertools.product(*(itertools.permutations(layers) for layers in little_layers))

    def _lower_bound(self, graph: OperationGraph, assignment: Dict[int, int], little_cores: int) -> float:
        """
        부분 배치의 makespan 하한 (공칭 시간 기준, 경합은 시간을 늘리기만 함)

        max(big 레인 부하, 각 little 레인 부하, 번들 종료 하한 + 이후 Execute 합)
        """
        big, little = ProcessorClass.BIG, ProcessorClass.LITTLE
        setups = graph.setup_ops()
        setup_total = sum(graph.nodes[op].duration_on(big) for op in setups)
        alloc = sum(graph.nodes[op].duration_on(big) for op in setups if graph.nodes[op].label == 'alloc')
        executes = graph.execute_ops()
        exec_ms = {graph.nodes[op].layer_index: graph.nodes[op].duration_on(graph.execute_class) for op in executes}

        big_prep = sum(graph.bundle_duration(layer, big) for layer, core in assignment.items() if core == 0)
        if graph.mode is ExecutionMode.GPU:
            bound = max(setup_total + big_prep, sum(exec_ms.values()))
        else:
            bound = setup_total + big_prep + sum(exec_ms.values())

        loads = [alloc] * little_cores
        for layer, core in assignment.items():
            if core > 0:
                loads[core - 1] += graph.bundle_duration(layer, little)
        if loads:
            bound = max(bound, max(loads))

        for layer, core in assignment.items():
            if core == 0:
                ready = setup_total + graph.bundle_duration(layer, big)
            else:
                ready = alloc + graph.bundle_duration(layer, little)
            bound = max(bound, ready + sum(ms for k, ms in exec_ms.items() if k >= layer))
        return bound

    def optimal_schedule(self, graph: OperationGraph, platform: PlatformConfig, limits: OracleLimits = None,
                         combo: Sequence[VariantScore] = (), prune: bool = True) -> OracleResult:
        """
        준비 번들의 큐 배치와 순서를 전부 탐색하여 makespan 최소 계획 반환

        Execute 는 big 클러스터(GPU 모드는 GPU)에 레이어 순서로 고정된다.

        Args:
            graph: 연산 그래프
            platform: 플랫폼 구성 (배경 부하는 무시)
            limits: 탐색 제한
            combo: 계획에 기록할 커널 조합
            prune: False 이면 하한 가지치기 없이 전부 평가

        Returns:
            OracleResult (시간 예산 초과 시 optimal=False 와 함께 그때까지의 최선)

        Raises:
            LimitsExceeded: 연산 수나 코어 수가 제한을 넘을 때
        """
        limits = limits or OracleLimits.from_config(self.config)
        self._check_limits(graph, platform, limits)
        quiet = platform.without_load()
        little_cores = platform.little_cores
        layers = graph.bundle_layers()
        deadline = time.monotonic() + limits.time_budget_ms / 1000.0

        incumbent = sequential_plan(graph, combo, little_cores)
        best_ms = self.simulator.simulate(incumbent, graph, quiet).makespan_ms
        explored = 1
        out_of_time = False

        def evaluate(assignment: Dict[int, int]):
            nonlocal incumbent, best_ms, explored, out_of_time
            big_layers = [layer for layer in layers if assignment[layer] == 0]
            little_layers = [[layer for layer in layers if assignment[layer] == j]
                             for j in range(1, little_cores + 1)]
            for big_order in self._big_orders(graph, big_layers, limits.permute_queues):
                for little_order in self._little_orders(little_layers, limits.permute_queues):
                    if time.monotonic() > deadline:
                        out_of_time = True
                        return
                    plan = layout_plan(graph, combo, [], little_order, big_order=big_order)
                    # 경합 없는 재생 시간이 이미 최선 이상이면 시뮬레이션 생략
                    if prune and self.simulator.contention_free_makespan(plan, graph, quiet) >= best_ms - self.tolerance:
                        continue
                    makespan = self.simulator.simulate(plan, graph, quiet).makespan_ms
                    explored += 1
                    if makespan < best_ms - self.tolerance:
                        incumbent, best_ms = plan, makespan

        def branch(position: int, assignment: Dict[int, int], used: int):
            if out_of_time:
                return
            if prune and self._lower_bound(graph, assignment, little_cores) >= best_ms - self.tolerance:
                return
            if position == len(layers):
                evaluate(assignment)
                return
            layer = layers[position]
            # little 코어는 동일하므로 새 코어는 번호가 가장 작은 미사용 코어만 사용
            for core in range(0, min(used + 1, little_cores) + 1):
                assignment[layer] = core
                branch(position + 1, assignment, max(used, core))
                del assignment[layer]

        branch(0, {}, 0)

        if out_of_time:
            logger.warning(f"oracle 시간 예산({limits.time_budget_ms}ms) 초과: 최선 값 {best_ms:.3f}ms 반환")
        logger.debug(f"oracle 탐색 완료: {explored}개 계획 평가, 최적 {best_ms:.3f}ms")
        return OracleResult(
            plan=incumbent.with_makespan(best_ms),
            makespan_ms=best_ms,
            optimal=not out_of_time,
            explored=explored,
        )
