#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Simulator
계획(Plan)의 콜드 추론을 이산 사건(fluid-rate) 방식으로 시뮬레이션

- 코어마다 큐 순서대로 처리, 선행 연산이 모두 끝나야 시작
- 디스크/메모리 I/O 연산은 동시 실행 수에 따라 용량을 비례 분배
- 배경 부하는 (1 - u) 배율로 진행 속도를 낮춤
- 부하가 걸린 코어의 큐 머리 번들을 한가한 코어가 가져가는 workload stealing
  (가져갔을 때 예상 종료 시각이 줄어드는 경우에만)
"""

import copy
import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Any, Deque, Dict, List, Mapping, Optional, Sequence, Tuple

from jsonschema import Draft7Validator

from collectors.operation_graph import OperationGraph, OperationKind, ResourceClass
from collectors.profile_model import ExecutionMode, ProcessorClass
from config import Config
from exceptions import DeadlockDetected, ModeMismatch, ProfileError, ValidationError

if TYPE_CHECKING:
    from processors.scheduler import Plan

logger = logging.getLogger(__name__)

BIG_CORE = 'big'
GPU_CORE = 'gpu'


def little_core(index: int) -> str:
    """little 코어 이름 (1부터 시작)"""
    return f"little{index}"


def core_class(core: str) -> ProcessorClass:
    if core == BIG_CORE:
        return ProcessorClass.BIG
    if core == GPU_CORE:
        return ProcessorClass.GPU
    return ProcessorClass.LITTLE


@dataclass(frozen=True)
class LoadInterval:
    """배경 부하 구간 [start_ms, end_ms) 동안 utilization 만큼 코어 점유"""
    start_ms: float
    end_ms: float
    utilization: float


@dataclass(frozen=True)
class PlatformConfig:
    """코어 구성, I/O 용량, 배경 부하"""
    little_cores: int = 4
    big_cores: int = 4
    disk_capacity: float = 1.5
    mem_capacity: float = 3.0
    background_load: Mapping[str, Tuple[LoadInterval, ...]] = field(default_factory=dict)

    def __post_init__(self):
        errors = []
        if self.little_cores < 0:
            errors.append("little_cores must be >= 0")
        if self.big_cores < 1:
            errors.append("big_cores must be >= 1")
        if not self.disk_capacity > 0 or not self.mem_capacity > 0:
            errors.append("disk_capacity and mem_capacity must be > 0")

        known = set(self.core_ids) | {GPU_CORE}
        for core, intervals in self.background_load.items():
            if core not in known:
                errors.append(f"background load for unknown core '{core}'")
            ordered = sorted(intervals, key=lambda iv: iv.start_ms)
            for interval in ordered:
                if not 0 <= interval.start_ms < interval.end_ms:
                    errors.append(f"{core}: invalid interval [{interval.start_ms}, {interval.end_ms})")
                if not 0 <= interval.utilization <= 1:
                    errors.append(f"{core}: utilization {interval.utilization} outside [0, 1]")
            for left, right in zip(ordered, ordered[1:]):
                if right.start_ms < left.end_ms:
                    errors.append(f"{core}: overlapping load intervals at {right.start_ms}")
        if errors:
            raise ValidationError('; '.join(errors))

    @classmethod
    def from_config(cls, config: Config = None, **overrides) -> 'PlatformConfig':
        """설정 클래스에서 플랫폼 구성 생성 (overrides 가 우선)"""
        config = config or Config()
        values = {
            'little_cores': config.LITTLE_CORES,
            'big_cores': config.BIG_CORES,
            'disk_capacity': config.DISK_CAPACITY,
            'mem_capacity': config.MEM_CAPACITY,
        }
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**values)

    @property
    def core_ids(self) -> List[str]:
        return [BIG_CORE] + [little_core(j) for j in range(1, self.little_cores + 1)]

    @property
    def has_load(self) -> bool:
        return any(iv.utilization > 0 for ivs in self.background_load.values() for iv in ivs)

    def utilization(self, core: str, time_ms: float) -> float:
        for interval in self.background_load.get(core, ()):
            if interval.start_ms <= time_ms < interval.end_ms:
                return interval.utilization
        return 0.0

    def load_boundaries(self) -> List[float]:
        points = set()
        for intervals in self.background_load.values():
            for interval in intervals:
                points.add(interval.start_ms)
                points.add(interval.end_ms)
        return sorted(points)

    def with_load(self, background_load: Mapping[str, Sequence[LoadInterval]]) -> 'PlatformConfig':
        return replace(self, background_load={core: tuple(ivs) for core, ivs in background_load.items()})

    def without_load(self) -> 'PlatformConfig':
        return replace(self, background_load={})


LOAD_TRACE_SCHEMA = {
    'type': 'object',
    'additionalProperties': {
        'type': 'array',
        'items': {
            'type': 'array',
            'items': {'type': 'number', 'minimum': 0},
            'minItems': 3,
            'maxItems': 3,
        },
    },
}


def load_background_trace(path: str) -> Dict[str, Tuple[LoadInterval, ...]]:
    """
    배경 부하 trace 파일 로드

    형식: {"little1": [[start_ms, end_ms, utilization], ...], ...}
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except OSError as e:
        raise ProfileError(f"cannot read load trace '{path}': {e}") from e
    except json.JSONDecodeError as e:
        raise ProfileError(f"malformed load trace '{path}': {e}") from e

    errors = list(Draft7Validator(LOAD_TRACE_SCHEMA).iter_errors(document))
    if errors:
        raise ValidationError('; '.join(error.message for error in errors))

    return {
        core: tuple(LoadInterval(float(start), float(end), float(u)) for start, end, u in rows)
        for core, rows in document.items()
    }


@dataclass(frozen=True)
class TimelineEntry:
    """연산 하나의 실제 실행 구간"""
    op_id: int
    layer_index: int
    kind: str
    core: str
    start_ms: float
    end_ms: float
    stalled_ms: float
    slowdown_factor: float


@dataclass(frozen=True)
class StealEvent:
    op_id: int
    layer_index: int
    from_core: str
    to_core: str
    time_ms: float


@dataclass(frozen=True)
class SimReport:
    """시뮬레이션 결과"""
    makespan_ms: float
    timeline: Tuple[TimelineEntry, ...]
    per_core_idle_ms: Mapping[str, float]
    steals: Tuple[StealEvent, ...] = ()
    storage_overhead_bytes: int = 0

    def entry(self, op_id: int) -> TimelineEntry:
        for item in self.timeline:
            if item.op_id == op_id:
                return item
        raise KeyError(op_id)

    def stage_totals(self) -> Dict[str, float]:
        """연산 종류별 실제 소요 시간 합계"""
        totals = {kind.value: 0.0 for kind in OperationKind}
        for item in self.timeline:
            totals[item.kind] += item.end_ms - item.start_ms
        return totals

    def to_dict(self) -> Dict[str, Any]:
        return {
            'makespan_ms': self.makespan_ms,
            'timeline': [vars_of(item) for item in self.timeline],
            'per_core_idle_ms': dict(self.per_core_idle_ms),
            'steals': [vars_of(item) for item in self.steals],
            'storage_overhead_bytes': self.storage_overhead_bytes,
        }

    @classmethod
    def from_dict(cls, document: Dict[str, Any]) -> 'SimReport':
        return cls(
            makespan_ms=float(document['makespan_ms']),
            timeline=tuple(TimelineEntry(**item) for item in document['timeline']),
            per_core_idle_ms=dict(document['per_core_idle_ms']),
            steals=tuple(StealEvent(**item) for item in document.get('steals', [])),
            storage_overhead_bytes=int(document.get('storage_overhead_bytes', 0)),
        )


def vars_of(item) -> Dict[str, Any]:
    return dict(item.__dict__)


@dataclass(frozen=True)
class Violation:
    """제약 위반 하나"""
    constraint: str     # precedence | core-exclusive | core-count | coverage
    op_ids: Tuple[int, ...]
    at_ms: float
    detail: str




@dataclass
class _Running:
    op_id: int
    remaining: float
    nominal: float
    start_ms: float
    head_since: float


class _EventLoop:
    """
    시뮬레이션 한 번의 진행 상태

    stealing 후보가 생기면 상태를 복제해 "가져간 경우"와 "가져가지 않은 경우"를
    stealing 없이 끝까지 진행하고, 종료 시각이 줄어드는 경우에만 실제로 가져간다.
    """

    def __init__(self, lanes: Dict[str, Deque[int]], graph: OperationGraph, platform: PlatformConfig,
                 apply_load: bool, tolerance: float):
        self.nodes = graph.nodes
        self.sinks = graph.sink_executes()
        self.platform = platform
        self.apply_load = apply_load
        self.tol = tolerance
        self.lanes = lanes
        self.lane_order = list(lanes.keys())
        self.cpu_lanes = [lane for lane in self.lane_order if lane != GPU_CORE]
        self.boundaries = platform.load_boundaries() if apply_load else []
        self.bundles = {layer: graph.bundle(layer) for layer in graph.bundle_layers()}

        self.finished = set()
        self.end_at: Dict[int, float] = {}
        self.entries: Dict[int, TimelineEntry] = {}
        self.running: Dict[str, _Running] = {}
        self.head_since: Dict[str, float] = {lane: 0.0 for lane in self.lane_order}
        self.steals: List[StealEvent] = []
        self.now = 0.0
        # stealing 없이 끝까지 진행했을 때의 종료 시각 (첫 후보에서 계산)
        self.baseline: Optional[float] = None

    def fork(self) -> '_EventLoop':
        twin = copy.copy(self)
        twin.lanes = {lane: deque(queue) for lane, queue in self.lanes.items()}
        twin.finished = set(self.finished)
        twin.end_at = dict(self.end_at)
        twin.entries = dict(self.entries)
        twin.running = {lane: replace(state) for lane, state in self.running.items()}
        twin.head_since = dict(self.head_since)
        twin.steals = list(self.steals)
        return twin

    def load(self, lane: str) -> float:
        return self.platform.utilization(lane, self.now) if self.apply_load else 0.0

    def runnable(self, op_id: int) -> bool:
        return self.nodes[op_id].precursors <= self.finished

    def start_ready(self):
        for lane in self.lane_order:
            queue = self.lanes[lane]
            if lane in self.running or not queue:
                continue
            head = queue[0]
            if not self.runnable(head) or self.load(lane) >= 1.0:
                continue
            queue.popleft()
            nominal = self.nodes[head].duration_on(core_class(lane))
            self.running[lane] = _Running(head, nominal, nominal, self.now, self.head_since[lane])

    def queue_estimate(self, lane: str) -> float:
        # 남은 큐 시간 (부하 반영, 완전 점유면 무한대)
        u = self.load(lane)
        cls = core_class(lane)
        work = sum(self.nodes[op].duration_on(cls) for op in self.lanes[lane])
        if lane in self.running:
            work += self.running[lane].remaining
        return math.inf if u >= 1.0 else work / (1.0 - u)

    def _head_bundle(self, victim: str) -> Optional[Tuple[int, ...]]:
        queue = self.lanes[victim]
        if not queue or self.nodes[queue[0]].kind is not OperationKind.READ:
            return None
        bundle = self.bundles.get(self.nodes[queue[0]].layer_index, ())
        if tuple(list(queue)[:len(bundle)]) != bundle or not self.runnable(queue[0]):
            return None
        return bundle

    def steal_candidates(self) -> List[Tuple[str, str, Tuple[int, ...]]]:
        """(thief, victim, bundle) 후보: thief 마다 남은 큐 시간이 긴 victim 순"""
        candidates = []
        for thief in self.cpu_lanes:
            if thief in self.running or self.load(thief) >= 1.0:
                continue
            own = self.lanes[thief]
            if any(self.nodes[op].kind is OperationKind.EXECUTE for op in own):
                continue
            if own and self.runnable(own[0]):
                continue

            victims = []
            for victim in self.cpu_lanes:
                if victim == thief or self.load(victim) <= 0.0:
                    continue
                bundle = self._head_bundle(victim)
                if bundle is not None:
                    victims.append((-self.queue_estimate(victim), self.lane_order.index(victim), victim, bundle))
            candidates.extend((thief, victim, bundle) for _, _, victim, bundle in sorted(victims))
        return candidates

    def move_bundle(self, thief: str, victim: str, bundle: Tuple[int, ...]):
        """victim 큐 머리 번들을 thief 큐의 레이어 순서 위치로 옮김"""
        for _ in bundle:
            self.lanes[victim].popleft()
        if victim not in self.running:
            self.head_since[victim] = self.now

        layer = self.nodes[bundle[0]].layer_index
        queue = self.lanes[thief]
        position = next((k for k, op in enumerate(queue) if self.nodes[op].layer_index > layer), len(queue))
        for offset, op in enumerate(bundle):
            queue.insert(position + offset, op)
        if position == 0:
            self.head_since[thief] = self.now

    def finish_without_stealing(self) -> float:
        """현재 상태에서 stealing 없이 끝까지 진행한 makespan (교착이면 무한대)"""
        twin = self.fork()
        try:
            twin.drain(stealing=False)
        except DeadlockDetected:
            return math.inf
        return twin.makespan()

    def try_steal(self) -> bool:
        for thief, victim, bundle in self.steal_candidates():
            if self.baseline is None:
                self.baseline = self.finish_without_stealing()
            trial = self.fork()
            trial.move_bundle(thief, victim, bundle)
            predicted = trial.finish_without_stealing()
            if math.isinf(predicted):
                continue
            if not math.isinf(self.baseline) and predicted >= self.baseline - self.tol:
                continue

            self.move_bundle(thief, victim, bundle)
            self.baseline = predicted
            layer = self.nodes[bundle[0]].layer_index
            self.steals.append(StealEvent(bundle[0], layer, victim, thief, self.now))
            logger.debug(f"t={self.now:.3f}ms {thief} 가 {victim} 의 레이어 {layer} 번들 가져감 "
                         f"(예상 종료 {predicted:.3f}ms)")
            return True
        return False

    def advance(self):
        """다음 사건(연산 종료 또는 부하 경계)까지 시간 진행"""
        nodes = self.nodes
        # 자원 종류별 동시 실행 수에 따른 진행 속도
        active = {ResourceClass.DISK_IO: 0, ResourceClass.MEM_BANDWIDTH: 0}
        for state in self.running.values():
            resource = nodes[state.op_id].resource_class
            if resource in active:
                active[resource] += 1
        capacity = {ResourceClass.DISK_IO: self.platform.disk_capacity,
                    ResourceClass.MEM_BANDWIDTH: self.platform.mem_capacity}

        rates: Dict[str, float] = {}
        finish_in: Dict[str, float] = {}
        for lane, state in self.running.items():
            resource = nodes[state.op_id].resource_class
            rate = min(1.0, capacity[resource] / active[resource]) if resource in active else 1.0
            rate *= 1.0 - self.load(lane)
            rates[lane] = rate
            if state.remaining <= 0.0:
                finish_in[lane] = 0.0
            elif rate > 0.0:
                finish_in[lane] = state.remaining / rate

        step = min(finish_in.values()) if finish_in else math.inf
        upcoming = [b - self.now for b in self.boundaries if b > self.now + self.tol]
        if upcoming:
            step = min(step, upcoming[0])
        if math.isinf(step):
            raise DeadlockDetected(self.now, {lane: state.op_id for lane, state in self.running.items()})

        self.now += step
        done = []
        for lane, state in self.running.items():
            if lane in finish_in and finish_in[lane] <= step + 1e-12:
                done.append((state.op_id, lane))
            else:
                state.remaining = max(0.0, state.remaining - rates[lane] * step)

        # 동시 종료는 op_id 오름차순 처리
        for op_id, lane in sorted(done):
            state = self.running.pop(lane)
            self.finished.add(op_id)
            self.end_at[op_id] = self.now
            node = nodes[op_id]
            elapsed = self.now - state.start_ms
            self.entries[op_id] = TimelineEntry(
                op_id=op_id,
                layer_index=node.layer_index,
                kind=node.kind.value,
                core=lane,
                start_ms=state.start_ms,
                end_ms=self.now,
                stalled_ms=max(0.0, state.start_ms - state.head_since),
                slowdown_factor=max(1.0, elapsed / state.nominal) if state.nominal > 0 else 1.0,
            )
            self.head_since[lane] = self.now

    def drain(self, stealing: bool):
        while True:
            self.start_ready()
            if stealing:
                while self.try_steal():
                    self.start_ready()

            if not self.running:
                if not any(self.lanes.values()):
                    return
                upcoming = [b for b in self.boundaries if b > self.now + self.tol]
                if not upcoming:
                    raise DeadlockDetected(self.now, {lane: q[0] for lane, q in self.lanes.items() if q})
                self.now = upcoming[0]
                continue
            self.advance()

    def makespan(self) -> float:
        return max((self.end_at[op] for op in self.sinks), default=max(self.end_at.values(), default=0.0))

    def report(self, storage_overhead_bytes: int) -> SimReport:
        makespan = self.makespan()
        busy = {lane: 0.0 for lane in self.lane_order}
        for item in self.entries.values():
            busy[item.core] += item.end_ms - item.start_ms
        idle = {lane: max(0.0, makespan - busy[lane]) for lane in self.lane_order}

        timeline = tuple(sorted(self.entries.values(), key=lambda item: (item.start_ms, item.op_id)))
        logger.debug(f"시뮬레이션 완료: makespan {makespan:.3f}ms, 연산 {len(timeline)}개, steal {len(self.steals)}회")
        return SimReport(
            makespan_ms=makespan,
            timeline=timeline,
            per_core_idle_ms=idle,
            steals=tuple(self.steals),
            storage_overhead_bytes=storage_overhead_bytes,
        )


class ColdInferenceSimulator:
    """콜드 추론 시뮬레이터 클래스"""

    def __init__(self, config: Config = None):
        """
        시뮬레이터 초기화

        Args:
            config: 설정 객체
        """
        self.config = config or Config()
        self.tolerance = self.config.TIME_TOLERANCE_MS

    def simulate(self, plan: 'Plan', graph: OperationGraph, platform: PlatformConfig) -> SimReport:
        """
        계획 시뮬레이션 (배경 부하가 있으면 적용, stealing 없음)

        Raises:
            DeadlockDetected: 어떤 연산도 진행할 수 없을 때
        """
        return self.run(plan.big_queue, plan.little_queues, graph, platform,
                        stealing=False, storage_overhead_bytes=plan.storage_overhead_bytes)

    def simulate_with_load(self, plan: 'Plan', graph: OperationGraph, platform: PlatformConfig,
                           stealing: bool) -> SimReport:
        """배경 부하 trace 와 (선택적) workload stealing 을 적용한 시뮬레이션"""
        if not platform.background_load:
            logger.warning("배경 부하가 없는 플랫폼으로 simulate_with_load 호출")
        return self.run(plan.big_queue, plan.little_queues, graph, platform,
                        stealing=stealing, storage_overhead_bytes=plan.storage_overhead_bytes)

    def simulate_gpu(self, plan: 'Plan', graph: OperationGraph, platform: PlatformConfig,
                     shader_cache: bool, stealing: bool = False) -> SimReport:
        """
        GPU 모드 시뮬레이션: Execute 는 GPU, 나머지는 CPU 코어에서 실행

        Raises:
            ModeMismatch: CPU 모드 그래프일 때
        """
        if graph.mode is not ExecutionMode.GPU:
            raise ModeMismatch("simulate_gpu needs a GPU-mode operation graph")
        if shader_cache:
            graph = graph.with_shader_cache()
        return self.run(plan.big_queue, plan.little_queues, graph, platform,
                        stealing=stealing, storage_overhead_bytes=plan.storage_overhead_bytes)

    def _build_lanes(self, big_queue: Sequence[int], little_queues: Sequence[Sequence[int]],
                     graph: OperationGraph, platform: PlatformConfig) -> Dict[str, Deque[int]]:
        placed = list(big_queue) + [op_id for queue in little_queues for op_id in queue]
        if len(placed) != len(set(placed)) or set(placed) != set(range(len(graph.nodes))):
            missing = sorted(set(range(len(graph.nodes))) - set(placed))
            raise ValidationError(f"plan queues must partition the operations (missing {missing})")
        if len(little_queues) > platform.little_cores:
            raise ValidationError(f"plan uses {len(little_queues)} little queues on {platform.little_cores} cores")

        lanes: Dict[str, Deque[int]] = {}
        if graph.mode is ExecutionMode.GPU:
            lanes[BIG_CORE] = deque(op for op in big_queue if graph.nodes[op].kind is not OperationKind.EXECUTE)
            lanes[GPU_CORE] = deque(op for op in big_queue if graph.nodes[op].kind is OperationKind.EXECUTE)
        else:
            lanes[BIG_CORE] = deque(big_queue)
        for j in range(1, platform.little_cores + 1):
            queue = little_queues[j - 1] if j <= len(little_queues) else ()
            lanes[little_core(j)] = deque(queue)
        return lanes

    def run(self, big_queue: Sequence[int], little_queues: Sequence[Sequence[int]],
            graph: OperationGraph, platform: PlatformConfig, stealing: bool = False,
            apply_load: bool = True, storage_overhead_bytes: int = 0) -> SimReport:
        """
        이벤트 루프 본체

        stealing 은 가져간 뒤의 예상 종료 시각이 줄어들 때만 일어나므로,
        stealing 을 켠 결과는 끈 결과보다 늦지 않다.

        Args:
            big_queue: Q_0 (GPU 모드에서는 Execute 만 GPU 로 분리)
            little_queues: Q_1..Q_{M_l}
            graph: 연산 그래프
            platform: 플랫폼 구성
            stealing: workload stealing 사용 여부
            apply_load: 배경 부하 적용 여부
            storage_overhead_bytes: 보고서에 기록할 캐시 저장 오버헤드

        Returns:
            SimReport
        """
        lanes = self._build_lanes(big_queue, little_queues, graph, platform)
        loop = _EventLoop(lanes, graph, platform, apply_load, self.tolerance)
        loop.drain(stealing)
        return loop.report(storage_overhead_bytes)

    def contention_free_makespan(self, plan: 'Plan', graph: OperationGraph, platform: PlatformConfig) -> float:
        """
        같은 큐를 경합/부하 없이 공칭 시간으로 재생한 makespan

        큐 순서가 고정되면 시작 시각은 연산 시간에 대해 단조이므로, 부하 없는 시뮬레이션 makespan 의 하한이 된다.
        (큐가 막히면 0.0)
        """
        lanes = {lane: list(queue) for lane, queue in
                 self._build_lanes(plan.big_queue, plan.little_queues, graph, platform).items()}
        free = {lane: 0.0 for lane in lanes}
        end: Dict[int, float] = {}
        while any(lanes.values()):
            progressed = False
            for lane, queue in lanes.items():
                if not queue:
                    continue
                node = graph.nodes[queue[0]]
                if not all(pred in end for pred in node.precursors):
                    continue
                queue.pop(0)
                start = max([free[lane]] + [end[pred] for pred in node.precursors])
                end[node.op_id] = start + node.duration_on(core_class(lane))
                free[lane] = end[node.op_id]
                progressed = True
            if not progressed:
                return 0.0
        return max((end[op] for op in graph.sink_executes()), default=max(end.values(), default=0.0))
    def validate_feasibility(self, report: SimReport, graph: OperationGraph,
                             platform: PlatformConfig) -> List[Violation]:
        """
        타임라인이 선행/코어 배타/코어 수 제약을 만족하는지 독립적으로 검사

        Returns:
            위반 목록 (비어 있으면 실행 가능)
        """
        tol = self.tolerance
        violations: List[Violation] = []
        by_op: Dict[int, TimelineEntry] = {}

        for item in report.timeline:
            if item.op_id in by_op or not 0 <= item.op_id < len(graph.nodes):
                violations.append(Violation('coverage', (item.op_id,), item.start_ms,
                                            'operation duplicated or unknown'))
                continue
            by_op[item.op_id] = item
        for op_id in range(len(graph.nodes)):
            if op_id not in by_op:
                violations.append(Violation('coverage', (op_id,), 0.0, 'operation missing from timeline'))

        # 선행 제약: S_i >= E_alpha
        for op_id, item in sorted(by_op.items()):
            for pred in sorted(graph.nodes[op_id].precursors):
                if pred in by_op and item.start_ms < by_op[pred].end_ms - tol:
                    violations.append(Violation(
                        'precedence', (pred, op_id), item.start_ms,
                        f"op {op_id} starts at {item.start_ms:.6f} before op {pred} ends at {by_op[pred].end_ms:.6f}"))

        # 코어 배타 제약: 코어마다 한 번에 하나
        per_core: Dict[str, List[TimelineEntry]] = {}
        for item in by_op.values():
            per_core.setdefault(item.core, []).append(item)
        for core, items in sorted(per_core.items()):
            items.sort(key=lambda it: (it.start_ms, it.end_ms, it.op_id))
            for left, right in zip(items, items[1:]):
                if right.start_ms < left.end_ms - tol and right.end_ms > right.start_ms and left.end_ms > left.start_ms:
                    violations.append(Violation(
                        'core-exclusive', (left.op_id, right.op_id), right.start_ms,
                        f"ops {left.op_id} and {right.op_id} overlap on {core}"))

        # 코어 수 제약: 동시에 사용 중인 CPU 코어 <= M_l + M_b
        known = set(platform.core_ids)
        if graph.mode is ExecutionMode.GPU:
            known.add(GPU_CORE)
        limit = platform.little_cores + platform.big_cores
        events = []
        for item in by_op.values():
            if item.core not in known:
                violations.append(Violation('core-count', (item.op_id,), item.start_ms,
                                            f"unknown core '{item.core}'"))
                continue
            if item.core == GPU_CORE or item.end_ms - item.start_ms <= tol:
                continue
            weight = platform.big_cores if item.core == BIG_CORE else 1
            events.append((item.end_ms, 0, -weight, item.op_id))
            events.append((item.start_ms, 1, weight, item.op_id))
        in_use = 0
        for time_ms, _, delta, op_id in sorted(events):
            in_use += delta
            if in_use > limit:
                violations.append(Violation('core-count', (op_id,), time_ms,
                                            f"{in_use} cores in use exceeds {limit}"))
        return violations
