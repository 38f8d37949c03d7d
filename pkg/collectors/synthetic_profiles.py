#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Synthetic Profiles
테스트와 oracle 하네스용 합성 프로파일 생성기
"""

import logging
from typing import Optional, Tuple

import numpy as np

from collectors.profile_model import (
    ExecutionMode, KernelVariant, LayerSpec, ModelProfile, PipelineCreateCost,
    ProcessorClass, SetupCosts, validate_profile
)

logger = logging.getLogger(__name__)

LITTLE = ProcessorClass.LITTLE
BIG = ProcessorClass.BIG


def make_kernel(kernel_id: str, read_little: float, read_big: float,
                transform_little: float, transform_big: float, exec_ms: float,
                read_cached: Optional[Tuple[float, float]] = None,
                mode: ExecutionMode = ExecutionMode.CPU,
                pipeline_create: Optional[PipelineCreateCost] = None,
                raw_bytes: int = 0, cached_bytes: int = 0) -> KernelVariant:
    """
    little/big 값으로 커널 변형 생성

    read_cached 를 생략하면 원본 read 시간을 그대로 쓴다.
    """
    cached_little, cached_big = read_cached if read_cached is not None else (read_little, read_big)
    return KernelVariant(
        kernel_id=kernel_id,
        read_raw_ms={LITTLE: read_little, BIG: read_big},
        read_cached_ms={LITTLE: cached_little, BIG: cached_big},
        transform_ms={LITTLE: transform_little, BIG: transform_big},
        execute_ms={mode.execute_class: exec_ms},
        raw_bytes=raw_bytes,
        cached_bytes=cached_bytes,
        pipeline_create=pipeline_create,
    )


def uniform_chain_profile(n_layers: int, read_little: float = 1.0, transform_little: float = 1.0,
                          read_big: float = 0.5, transform_big: float = 0.5, exec_ms: float = 1.0,
                          memory_alloc_ms: float = 0.0, name: str = 'uniform-chain') -> ModelProfile:
    """
    모든 레이어가 같은 비용을 갖는 선형 체인 (커널 후보 1개)

    기본값은 little 준비 2ms, big 준비 1ms, 실행 1ms.
    """
    layers = []
    for index in range(1, n_layers + 1):
        kernel = make_kernel('conv', read_little, read_big, transform_little, transform_big, exec_ms)
        layers.append(LayerSpec(
            layer_index=index,
            operator_name=f"conv{index}",
            predecessors=frozenset({index - 1}) if index > 1 else frozenset(),
            candidates=(kernel,),
        ))
    return validate_profile(ModelProfile(
        model_name=name,
        mode=ExecutionMode.CPU,
        layers=tuple(layers),
        setup=SetupCosts(memory_alloc_ms=memory_alloc_ms),
    ))


def random_profile(seed: int, max_layers: int = 4, max_kernels: int = 2,
                   mode: ExecutionMode = ExecutionMode.CPU,
                   n_layers: Optional[int] = None) -> ModelProfile:
    """
    시드 기반 무작위 DAG 프로파일

    레이어 i 는 i-1 에 항상 의존하고, 그 이전 레이어에 확률적으로 추가 의존한다.
    little 준비 시간은 big 보다 1~4배 길다.

    Args:
        seed: 난수 시드
        max_layers: 최대 레이어 수
        max_kernels: 레이어당 최대 커널 후보 수
        mode: CPU/GPU 모드
        n_layers: 지정 시 레이어 수 고정

    Returns:
        검증된 ModelProfile
    """
    rng = np.random.default_rng(seed)
    n = int(n_layers or rng.integers(1, max_layers + 1))

    def duration(low: float, high: float) -> float:
        return round(float(rng.uniform(low, high)), 2)

    layers = []
    for index in range(1, n + 1):
        predecessors = set()
        if index > 1:
            predecessors.add(index - 1)
            for earlier in range(1, index - 1):
                if rng.random() < 0.3:
                    predecessors.add(earlier)

        kernels = []
        for k in range(int(rng.integers(1, max_kernels + 1))):
            read_big = duration(0.2, 3.0)
            transform_big = duration(0.0, 6.0) if rng.random() < 0.8 else 0.0
            slow = float(rng.uniform(1.0, 4.0))
            read_little = round(read_big * slow, 2)
            transform_little = round(transform_big * slow, 2)
            cached = None
            if transform_big > 0:
                cached_big = duration(0.2, 4.0)
                cached = (round(cached_big * slow, 2), cached_big)
            pipeline = None
            if mode is ExecutionMode.GPU:
                pipeline = PipelineCreateCost(hit_ms=duration(0.0, 0.5), miss_ms=duration(0.5, 4.0))
            kernels.append(make_kernel(
                f"k{k + 1}", read_little, read_big, transform_little, transform_big,
                duration(0.5, 8.0), read_cached=cached, mode=mode, pipeline_create=pipeline,
                raw_bytes=int(rng.integers(1, 64)) * 1024,
                cached_bytes=int(rng.integers(1, 128)) * 1024,
            ))

        layers.append(LayerSpec(
            layer_index=index,
            operator_name=f"op{index}",
            predecessors=frozenset(predecessors),
            candidates=tuple(kernels),
        ))

    setup = SetupCosts(
        memory_alloc_ms=duration(0.0, 1.0) if rng.random() < 0.5 else 0.0,
        gpu_driver_init_ms=duration(1.0, 5.0) if mode is ExecutionMode.GPU else 0.0,
    )
    profile = ModelProfile(model_name=f"random-{seed}", mode=mode, layers=tuple(layers), setup=setup)
    logger.debug(f"합성 프로파일 생성: seed={seed}, N={n}")
    return validate_profile(profile)


def random_little_cores(seed: int, max_little: int = 2) -> int:
    """시드 기반 little 코어 수 (1..max_little)"""
    return int(np.random.default_rng(seed + 7919).integers(1, max_little + 1))
