#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Operation Graph
선택된 커널 조합으로 프로파일을 read/transform/[pipeline]/execute 연산 DAG 로 확장
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx

from collectors.profile_model import ExecutionMode, KernelVariant, ModelProfile, ProcessorClass
from exceptions import ValidationError

logger = logging.getLogger(__name__)


class OperationKind(Enum):
    SETUP = 'setup'
    READ = 'read'
    TRANSFORM = 'transform'
    PIPELINE_CREATE = 'pipeline'
    EXECUTE = 'execute'


class ResourceClass(Enum):
    """경합 모델에서 공유되는 자원 종류"""
    DISK_IO = 'disk'
    MEM_BANDWIDTH = 'mem'
    COMPUTE = 'compute'


RESOURCE_BY_KIND = {
    OperationKind.SETUP: ResourceClass.COMPUTE,
    OperationKind.READ: ResourceClass.DISK_IO,
    OperationKind.TRANSFORM: ResourceClass.MEM_BANDWIDTH,
    OperationKind.PIPELINE_CREATE: ResourceClass.COMPUTE,
    OperationKind.EXECUTE: ResourceClass.COMPUTE,
}

# 준비 번들 내 연산 순서
PREP_KINDS = (OperationKind.READ, OperationKind.TRANSFORM, OperationKind.PIPELINE_CREATE)

_LABEL_PREFIX = {
    OperationKind.READ: 'r',
    OperationKind.TRANSFORM: 'w',
    OperationKind.PIPELINE_CREATE: 'p',
    OperationKind.EXECUTE: 'e',
}


@dataclass(frozen=True)
class OperationNode:
    """연산 DAG 의 노드 하나"""
    op_id: int
    layer_index: int            # setup 노드는 0
    kind: OperationKind
    resource_class: ResourceClass
    duration_ms: Mapping[ProcessorClass, float]
    precursors: FrozenSet[int]
    label: str = ''
    shader_hit_ms: Optional[float] = None   # PipelineCreate 노드의 shader 캐시 hit 비용

    def duration_on(self, cls: ProcessorClass) -> float:
        """
        프로세서 종류별 공칭 실행 시간

        Execute 노드는 실행 프로세서(big 또는 gpu) 값 하나만 가진다.
        """
        if cls in self.duration_ms:
            return self.duration_ms[cls]
        if self.kind is OperationKind.EXECUTE and len(self.duration_ms) == 1:
            return next(iter(self.duration_ms.values()))
        raise KeyError(f"{self.label or self.op_id} has no duration for {cls.value}")


@dataclass(frozen=True)
class OperationGraph:
    """연산 DAG (op_id 순으로 정렬된 노드 목록)"""
    nodes: Tuple[OperationNode, ...]
    n_layers: int
    mode: ExecutionMode
    sink_layers: Tuple[int, ...] = field(default=())

    def node(self, op_id: int) -> OperationNode:
        return self.nodes[op_id]

    @property
    def execute_class(self) -> ProcessorClass:
        return self.mode.execute_class

    def setup_ops(self) -> List[int]:
        return [n.op_id for n in self.nodes if n.kind is OperationKind.SETUP]

    def execute_op(self, layer_index: int) -> int:
        for n in self.nodes:
            if n.kind is OperationKind.EXECUTE and n.layer_index == layer_index:
                return n.op_id
        raise KeyError(f"no execute op for layer {layer_index}")

    def execute_ops(self) -> List[int]:
        """레이어 순서(위상 순서)의 Execute 연산"""
        execs = [n for n in self.nodes if n.kind is OperationKind.EXECUTE]
        return [n.op_id for n in sorted(execs, key=lambda n: n.layer_index)]

    def bundle(self, layer_index: int) -> Tuple[int, ...]:
        """레이어의 준비 번들 (read, [transform], [pipeline])"""
        ops = [n for n in self.nodes if n.layer_index == layer_index and n.kind in PREP_KINDS]
        return tuple(n.op_id for n in sorted(ops, key=lambda n: PREP_KINDS.index(n.kind)))

    def bundle_layers(self) -> List[int]:
        """준비 번들을 가진 레이어 (오름차순)"""
        return sorted({n.layer_index for n in self.nodes if n.kind in PREP_KINDS})

    def bundle_duration(self, layer_index: int, cls: ProcessorClass) -> float:
        return sum(self.nodes[op_id].duration_on(cls) for op_id in self.bundle(layer_index))

    def sink_executes(self) -> List[int]:
        return [self.execute_op(layer) for layer in self.sink_layers]

    def to_networkx(self) -> nx.DiGraph:
        graph = nx.DiGraph()
        for n in self.nodes:
            graph.add_node(n.op_id, kind=n.kind.value, layer=n.layer_index)
        for n in self.nodes:
            for pred in n.precursors:
                graph.add_edge(pred, n.op_id)
        return graph

    def topological_order(self) -> List[int]:
        return list(nx.lexicographical_topological_sort(self.to_networkx()))

    def validate(self) -> 'OperationGraph':
        """비순환성, 노드 수, Execute 도달 가능성 검사"""
        graph = self.to_networkx()
        if not nx.is_directed_acyclic_graph(graph):
            raise ValidationError(f"operation graph has a cycle: {nx.find_cycle(graph)}")

        per_layer = 4 if self.mode is ExecutionMode.GPU else 3
        setups = len(self.setup_ops())
        full = len(self.bundle_layers()) == self.n_layers
        if full and self._full_node_count(per_layer) != len(self.nodes) - setups:
            raise ValidationError(f"unexpected node count {len(self.nodes)} for N={self.n_layers}")

        if full:
            reachable = {n.op_id for n in self.nodes if n.kind is OperationKind.READ}
            for op_id in nx.topological_sort(graph):
                if any(pred in reachable for pred in graph.predecessors(op_id)):
                    reachable.add(op_id)
            missing = [op_id for op_id in self.execute_ops() if op_id not in reachable]
            if missing:
                raise ValidationError(f"execute ops unreachable from any read: {missing}")
        return self

    def _full_node_count(self, per_layer: int) -> int:
        # 캐시된 레이어는 Transform 노드가 없다
        transforms = sum(1 for n in self.nodes if n.kind is OperationKind.TRANSFORM)
        return self.n_layers * (per_layer - 1) + transforms

    def with_shader_cache(self) -> 'OperationGraph':
        """PipelineCreate 비용을 shader 캐시 hit 값으로 치환한 그래프"""
        nodes = []
        for n in self.nodes:
            if n.kind is OperationKind.PIPELINE_CREATE and n.shader_hit_ms is not None:
                hit = n.shader_hit_ms
                n = replace(n, duration_ms={cls: hit for cls in n.duration_ms})
            nodes.append(n)
        return replace(self, nodes=tuple(nodes))

    def extended(self, extra: Sequence[OperationNode]) -> 'OperationGraph':
        """추가 노드(웜 커널 준비 등)를 붙인 그래프"""
        for offset, n in enumerate(extra):
            if n.op_id != len(self.nodes) + offset:
                raise ValueError(f"extra node ids must continue at {len(self.nodes)}")
        return replace(self, nodes=self.nodes + tuple(extra))


def _node(op_id, layer_index, kind, durations, precursors, label, shader_hit=None) -> OperationNode:
    return OperationNode(
        op_id=op_id,
        layer_index=layer_index,
        kind=kind,
        resource_class=RESOURCE_BY_KIND[kind],
        duration_ms=durations,
        precursors=frozenset(precursors),
        label=label,
        shader_hit_ms=shader_hit,
    )


def _cpu_costs(value_on) -> Dict[ProcessorClass, float]:
    return {cls: value_on(cls) for cls in (ProcessorClass.LITTLE, ProcessorClass.BIG)}


def prep_nodes(layer_index: int, variant: KernelVariant, mode: ExecutionMode, first_id: int,
               setup_precursors: Mapping[OperationKind, Iterable[int]] = None,
               shader_cache: bool = False) -> List[OperationNode]:
    """
    레이어 하나의 준비 번들 노드 생성 (read → [transform] → [pipeline])

    Args:
        layer_index: 레이어 번호
        variant: 선택된 커널 변형 (캐시 여부 포함)
        mode: CPU/GPU 모드
        first_id: 첫 노드의 op_id
        setup_precursors: 종류별로 앞서야 하는 setup 노드
        shader_cache: PipelineCreate 를 hit 비용으로 생성할지 여부
    """
    setup_precursors = setup_precursors or {}
    nodes = []
    op_id = first_id

    read = _node(op_id, layer_index, OperationKind.READ, _cpu_costs(variant.read_on),
                 setup_precursors.get(OperationKind.READ, ()), f"r{layer_index}")
    nodes.append(read)
    op_id += 1

    if not variant.cached:
        nodes.append(_node(op_id, layer_index, OperationKind.TRANSFORM, _cpu_costs(variant.transform_on),
                           [read.op_id], f"w{layer_index}"))
        op_id += 1

    if mode is ExecutionMode.GPU:
        cost = variant.pipeline_create_on(shader_cache)
        hit = variant.pipeline_create_on(True)
        nodes.append(_node(op_id, layer_index, OperationKind.PIPELINE_CREATE,
                           {ProcessorClass.LITTLE: cost, ProcessorClass.BIG: cost},
                           setup_precursors.get(OperationKind.PIPELINE_CREATE, ()),
                           f"p{layer_index}", shader_hit=hit))
    return nodes


def build_operation_graph(profile: ModelProfile, combo: Sequence[KernelVariant],
                          shader_cache: bool = False,
                          prep_layers: Optional[Iterable[int]] = None,
                          include_setup: bool = True) -> OperationGraph:
    """
    커널 조합으로부터 연산 DAG 생성

    Args:
        profile: 모델 프로파일
        combo: 레이어별로 선택된 커널 변형 (길이 N)
        shader_cache: GPU 모드에서 PipelineCreate 를 hit 비용으로 생성
        prep_layers: 준비 번들을 생성할 레이어 (None 이면 전체)
        include_setup: setup 노드 생성 여부

    Returns:
        OperationGraph
    """
    if len(combo) != profile.n_layers:
        raise ValueError(f"combo selects {len(combo)} variants for {profile.n_layers} layers")

    prep_set = set(range(1, profile.n_layers + 1)) if prep_layers is None else set(prep_layers)
    nodes: List[OperationNode] = []

    # setup 노드: 메모리 할당은 모든 read 앞, GPU 드라이버 초기화는 모든 pipeline 앞
    setup_precursors: Dict[OperationKind, List[int]] = {}
    if include_setup:
        if profile.setup.memory_alloc_ms > 0:
            alloc = profile.setup.memory_alloc_ms
            nodes.append(_node(len(nodes), 0, OperationKind.SETUP,
                               {ProcessorClass.LITTLE: alloc, ProcessorClass.BIG: alloc}, (), 'alloc'))
            setup_precursors[OperationKind.READ] = [nodes[-1].op_id]
        if profile.mode is ExecutionMode.GPU:
            driver = profile.setup.gpu_driver_init_ms
            nodes.append(_node(len(nodes), 0, OperationKind.SETUP,
                               {ProcessorClass.LITTLE: driver, ProcessorClass.BIG: driver}, (), 'driver'))
            setup_precursors[OperationKind.PIPELINE_CREATE] = [nodes[-1].op_id]

    execute_ids: Dict[int, int] = {}
    execute_class = profile.mode.execute_class
    for layer, variant in zip(profile.layers, combo):
        index = layer.layer_index
        bundle = []
        if index in prep_set:
            bundle = prep_nodes(index, variant, profile.mode, len(nodes), setup_precursors, shader_cache)
            nodes.extend(bundle)

        precursors = set()
        # 번들 내 마지막 데이터 준비 연산 (transform 또는 캐시된 read) + pipeline
        data_ops = [n for n in bundle if n.kind in (OperationKind.READ, OperationKind.TRANSFORM)]
        if data_ops:
            precursors.add(data_ops[-1].op_id)
        precursors.update(n.op_id for n in bundle if n.kind is OperationKind.PIPELINE_CREATE)
        precursors.update(execute_ids[pred] for pred in layer.predecessors)

        execute = _node(len(nodes), index, OperationKind.EXECUTE,
                        {execute_class: variant.execute_on(execute_class)}, precursors, f"e{index}")
        nodes.append(execute)
        execute_ids[index] = execute.op_id

    graph = OperationGraph(nodes=tuple(nodes), n_layers=profile.n_layers, mode=profile.mode,
                           sink_layers=tuple(profile.sinks))
    logger.debug(f"연산 그래프 생성: {len(nodes)}개 노드 (N={profile.n_layers}, mode={profile.mode.value})")
    return graph.validate()
