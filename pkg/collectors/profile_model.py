#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Profile Model
DNN 모델의 레이어별 커널 후보와 측정 비용(cost profile) 데이터 모델
"""

import math
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

from exceptions import ValidationError

logger = logging.getLogger(__name__)


class ProcessorClass(Enum):
    """스케줄 가능한 프로세서 종류"""
    LITTLE = 'little'   # 개별 스케줄 가능한 little 코어
    BIG = 'big'         # 모든 big 코어를 하나로 묶은 클러스터
    GPU = 'gpu'


class ExecutionMode(Enum):
    """커널 실행 위치 모드"""
    CPU = 'cpu'
    GPU = 'gpu'

    @property
    def execute_class(self) -> ProcessorClass:
        """Execute 연산이 실행되는 프로세서"""
        return ProcessorClass.GPU if self is ExecutionMode.GPU else ProcessorClass.BIG


def _lookup(costs: Mapping[ProcessorClass, float], cls: ProcessorClass, what: str) -> float:
    try:
        return costs[cls]
    except KeyError:
        raise KeyError(f"{what} has no duration for {cls.value}") from None


@dataclass(frozen=True)
class PipelineCreateCost:
    """GPU 파이프라인 생성 비용 (shader 캐시 hit/miss)"""
    hit_ms: float = 0.0
    miss_ms: float = 0.0

    def cost(self, shader_cache: bool) -> float:
        return self.hit_ms if shader_cache else self.miss_ms


@dataclass(frozen=True)
class KernelVariant:
    """
    연산자의 구체적 커널 구현 하나와 그 비용

    cached=True 이면 변환된 가중치를 디스크에서 바로 읽으므로
    준비 시간은 read_cached_ms 뿐이다 (transform 생략).
    """
    kernel_id: str
    read_raw_ms: Mapping[ProcessorClass, float]
    read_cached_ms: Mapping[ProcessorClass, float]
    transform_ms: Mapping[ProcessorClass, float]
    execute_ms: Mapping[ProcessorClass, float]
    raw_bytes: int = 0
    cached_bytes: int = 0
    pipeline_create: Optional[PipelineCreateCost] = None
    cached: bool = False

    @property
    def has_transform(self) -> bool:
        """어느 프로세서에서든 변환 비용이 있으면 True"""
        return any(value > 0 for value in self.transform_ms.values())

    @property
    def label(self) -> str:
        return f"{self.kernel_id} (cached)" if self.cached else self.kernel_id

    def as_cached(self) -> 'KernelVariant':
        """변환 결과를 캐싱한 쌍둥이 변형"""
        return replace(self, cached=True)

    def read_on(self, cls: ProcessorClass) -> float:
        costs = self.read_cached_ms if self.cached else self.read_raw_ms
        return _lookup(costs, cls, f"read of {self.label}")

    def transform_on(self, cls: ProcessorClass) -> float:
        if self.cached:
            return 0.0
        return _lookup(self.transform_ms, cls, f"transform of {self.label}")

    def prep_on(self, cls: ProcessorClass) -> float:
        """준비 시간 = read (+ transform, 캐시 미사용 시)"""
        return self.read_on(cls) + self.transform_on(cls)

    def execute_on(self, cls: ProcessorClass) -> float:
        return _lookup(self.execute_ms, cls, f"execute of {self.label}")

    def pipeline_create_on(self, shader_cache: bool) -> float:
        if self.pipeline_create is None:
            return 0.0
        return self.pipeline_create.cost(shader_cache)

    @property
    def storage_overhead_bytes(self) -> int:
        return self.cached_bytes if self.cached else 0


@dataclass(frozen=True)
class LayerSpec:
    """모델 레이어 하나 (연산자 + 커널 후보 목록)"""
    layer_index: int
    operator_name: str
    predecessors: FrozenSet[int]
    candidates: Tuple[KernelVariant, ...]

    def kernel(self, kernel_id: str) -> KernelVariant:
        for candidate in self.candidates:
            if candidate.kernel_id == kernel_id:
                return candidate
        raise KeyError(f"layer {self.layer_index} has no kernel '{kernel_id}'")


@dataclass(frozen=True)
class SetupCosts:
    """모델 단위로 한 번만 발생하는 준비 비용"""
    memory_alloc_ms: float = 0.0
    gpu_driver_init_ms: float = 0.0


@dataclass(frozen=True)
class ModelProfile:
    """레이어 목록과 의존성 DAG로 표현된 DNN 비용 프로파일"""
    model_name: str
    mode: ExecutionMode
    layers: Tuple[LayerSpec, ...]
    setup: SetupCosts = field(default_factory=SetupCosts)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def layer(self, layer_index: int) -> LayerSpec:
        return self.layers[layer_index - 1]

    def successors(self) -> Dict[int, List[int]]:
        result = {layer.layer_index: [] for layer in self.layers}
        for layer in self.layers:
            for pred in sorted(layer.predecessors):
                result[pred].append(layer.layer_index)
        return result

    @property
    def sinks(self) -> List[int]:
        """후속 레이어가 없는 출력 레이어"""
        return [index for index, succ in self.successors().items() if not succ]


def _check_durations(costs: Mapping[ProcessorClass, float], where: str, errors: List[str]):
    for cls, value in costs.items():
        if not isinstance(value, (int, float)) or not math.isfinite(value) or value < 0:
            errors.append(f"{where}.{cls.value}: duration must be finite and >= 0 (got {value!r})")


def validate_profile(profile: ModelProfile) -> ModelProfile:
    """
    프로파일 불변 조건 검사

    Args:
        profile: 검사할 프로파일

    Returns:
        동일한 프로파일 (검사 통과 시)

    Raises:
        ValidationError: 하나 이상의 위반이 있을 때 (모든 위반을 한 메시지로)
    """
    errors = []

    if not profile.layers:
        errors.append("profile has no layers")

    for name, value in (('memory_alloc_ms', profile.setup.memory_alloc_ms),
                        ('gpu_driver_init_ms', profile.setup.gpu_driver_init_ms)):
        if not math.isfinite(value) or value < 0:
            errors.append(f"setup.{name}: duration must be finite and >= 0")
    if profile.mode is ExecutionMode.CPU and profile.setup.gpu_driver_init_ms > 0:
        errors.append("setup.gpu_driver_init_ms is only valid in GPU mode")

    execute_class = profile.mode.execute_class
    for position, layer in enumerate(profile.layers, start=1):
        where = f"layer {layer.layer_index}"
        if layer.layer_index != position:
            errors.append(f"{where}: layers must be numbered 1..N in order (expected {position})")
        for pred in sorted(layer.predecessors):
            if not 1 <= pred < layer.layer_index:
                errors.append(f"{where}: predecessor {pred} is not an earlier layer")
        if not layer.candidates:
            errors.append(f"{where}: candidates must not be empty")

        seen = set()
        for kernel in layer.candidates:
            kwhere = f"{where} kernel '{kernel.kernel_id}'"
            if kernel.kernel_id in seen:
                errors.append(f"{kwhere}: duplicate kernel_id")
            seen.add(kernel.kernel_id)

            for label, costs in (('read_raw_ms', kernel.read_raw_ms),
                                 ('read_cached_ms', kernel.read_cached_ms),
                                 ('transform_ms', kernel.transform_ms),
                                 ('execute_ms', kernel.execute_ms)):
                _check_durations(costs, f"{kwhere}.{label}", errors)
            for label, costs in (('read_raw_ms', kernel.read_raw_ms),
                                 ('read_cached_ms', kernel.read_cached_ms),
                                 ('transform_ms', kernel.transform_ms)):
                for cls in (ProcessorClass.LITTLE, ProcessorClass.BIG):
                    if cls not in costs:
                        errors.append(f"{kwhere}.{label}: missing '{cls.value}'")
            if execute_class not in kernel.execute_ms:
                errors.append(f"{kwhere}.execute_ms: missing '{execute_class.value}' for {profile.mode.value} mode")

            if kernel.pipeline_create is not None:
                if profile.mode is not ExecutionMode.GPU:
                    errors.append(f"{kwhere}: pipeline_create_ms is only valid in GPU mode")
                for value in (kernel.pipeline_create.hit_ms, kernel.pipeline_create.miss_ms):
                    if not math.isfinite(value) or value < 0:
                        errors.append(f"{kwhere}.pipeline_create_ms: duration must be finite and >= 0")

            if kernel.raw_bytes < 0 or kernel.cached_bytes < 0:
                errors.append(f"{kwhere}.bytes: sizes must be >= 0")

            # 변환이 없는 커널은 캐싱해도 동일해야 함
            if not kernel.has_transform:
                for cls, raw in kernel.read_raw_ms.items():
                    cached = kernel.read_cached_ms.get(cls, raw)
                    if abs(cached - raw) > 1e-9:
                        errors.append(
                            f"{kwhere}: transform is 0 so read_cached_ms must equal read_raw_ms "
                            f"({cls.value}: {cached} != {raw})"
                        )

    if errors:
        logger.debug(f"프로파일 검증 실패 {len(errors)}건: {profile.model_name}")
        raise ValidationError('; '.join(errors))

    return profile
