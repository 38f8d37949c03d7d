#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Profile Loader
JSON 프로파일 문서를 읽어 검증된 ModelProfile 로 변환
"""

import json
import logging
from typing import Any, Dict, IO, Union

from jsonschema import Draft7Validator

from collectors.profile_model import (
    ExecutionMode, KernelVariant, LayerSpec, ModelProfile, PipelineCreateCost,
    ProcessorClass, SetupCosts, validate_profile
)
from exceptions import ParseError, ProfileError, ValidationError

logger = logging.getLogger(__name__)


def profile_schema(strict: bool = True) -> Dict[str, Any]:
    """
    프로파일 문서 JSON 스키마 생성

    Args:
        strict: True 이면 알려지지 않은 필드를 거부

    Returns:
        Draft-7 스키마
    """
    extra = not strict
    duration = {'type': 'number', 'minimum': 0}

    def per_class(required):
        return {
            'type': 'object',
            'properties': {cls.value: duration for cls in ProcessorClass},
            'required': required,
            'additionalProperties': extra,
        }

    execute = {
        'type': 'object',
        'properties': {'big': duration, 'gpu': duration},
        'minProperties': 1,
        'additionalProperties': extra,
    }
    kernel = {
        'type': 'object',
        'properties': {
            'id': {'type': 'string', 'minLength': 1},
            'costs': {
                'type': 'object',
                'properties': {
                    'read_raw_ms': per_class(['little', 'big']),
                    'read_cached_ms': per_class(['little', 'big']),
                    'transform_ms': per_class(['little', 'big']),
                    'execute_ms': execute,
                    'pipeline_create_ms': {
                        'type': 'object',
                        'properties': {'hit': duration, 'miss': duration},
                        'required': ['hit', 'miss'],
                        'additionalProperties': extra,
                    },
                },
                'required': ['read_raw_ms', 'read_cached_ms', 'transform_ms', 'execute_ms'],
                'additionalProperties': extra,
            },
            'bytes': {
                'type': 'object',
                'properties': {
                    'raw': {'type': 'integer', 'minimum': 0},
                    'cached': {'type': 'integer', 'minimum': 0},
                },
                'required': ['raw', 'cached'],
                'additionalProperties': extra,
            },
        },
        'required': ['id', 'costs'],
        'additionalProperties': extra,
    }
    layer = {
        'type': 'object',
        'properties': {
            'index': {'type': 'integer', 'minimum': 1},
            'op': {'type': 'string'},
            'preds': {'type': 'array', 'items': {'type': 'integer'}, 'uniqueItems': True},
            'kernels': {'type': 'array', 'items': kernel, 'minItems': 1},
        },
        'required': ['index', 'op', 'preds', 'kernels'],
        'additionalProperties': extra,
    }
    return {
        'type': 'object',
        'properties': {
            'model': {'type': 'string'},
            'mode': {'enum': [mode.value for mode in ExecutionMode]},
            'setup': {
                'type': 'object',
                'properties': {'memory_alloc_ms': duration, 'gpu_driver_init_ms': duration},
                'required': ['memory_alloc_ms'],
                'additionalProperties': extra,
            },
            'layers': {'type': 'array', 'items': layer, 'minItems': 1},
        },
        'required': ['model', 'mode', 'setup', 'layers'],
        'additionalProperties': extra,
    }


_CLASS_KEYS = frozenset(cls.value for cls in ProcessorClass)


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not allowed")


def _class_map(raw: Dict[str, float]) -> Dict[ProcessorClass, float]:
    return {ProcessorClass(key): float(value) for key, value in raw.items() if key in _CLASS_KEYS}


def _class_doc(costs) -> Dict[str, float]:
    return {cls.value: costs[cls] for cls in ProcessorClass if cls in costs}


class ProfileLoader:
    """프로파일 문서 로더 클래스"""

    def __init__(self, lenient: bool = False):
        """
        로더 초기화

        Args:
            lenient: 알려지지 않은 필드 허용 여부 (--lenient)
        """
        self.lenient = lenient
        self.validator = Draft7Validator(profile_schema(strict=not lenient))

    def _decode(self, source: Union[bytes, str, IO]) -> Any:
        if hasattr(source, 'read'):
            source = source.read()
        if isinstance(source, bytes):
            try:
                source = source.decode('utf-8')
            except UnicodeDecodeError as e:
                raise ParseError(f"profile is not UTF-8: {e}") from e
        try:
            return json.loads(source, parse_constant=_reject_constant)
        except (json.JSONDecodeError, ValueError) as e:
            raise ParseError(f"malformed profile document: {e}") from e

    def _check_schema(self, document: Any):
        errors = sorted(self.validator.iter_errors(document), key=lambda err: [str(part) for part in err.absolute_path])
        if errors:
            messages = []
            for error in errors:
                location = '/'.join(str(part) for part in error.absolute_path) or '<root>'
                messages.append(f"{location}: {error.message}")
            raise ValidationError('; '.join(messages))

    def _build_kernel(self, doc: Dict[str, Any]) -> KernelVariant:
        costs = doc['costs']
        sizes = doc.get('bytes', {'raw': 0, 'cached': 0})
        pipeline = costs.get('pipeline_create_ms')
        return KernelVariant(
            kernel_id=doc['id'],
            read_raw_ms=_class_map(costs['read_raw_ms']),
            read_cached_ms=_class_map(costs['read_cached_ms']),
            transform_ms=_class_map(costs['transform_ms']),
            execute_ms=_class_map(costs['execute_ms']),
            raw_bytes=int(sizes['raw']),
            cached_bytes=int(sizes['cached']),
            pipeline_create=PipelineCreateCost(float(pipeline['hit']), float(pipeline['miss'])) if pipeline else None,
        )

    def from_document(self, document: Dict[str, Any]) -> ModelProfile:
        """
        파싱된 문서로부터 ModelProfile 생성

        Args:
            document: JSON 문서 (dict)

        Returns:
            검증된 ModelProfile
        """
        self._check_schema(document)

        layers = []
        for layer_doc in document['layers']:
            layers.append(LayerSpec(
                layer_index=layer_doc['index'],
                operator_name=layer_doc['op'],
                predecessors=frozenset(layer_doc['preds']),
                candidates=tuple(self._build_kernel(k) for k in layer_doc['kernels']),
            ))

        setup_doc = document['setup']
        profile = ModelProfile(
            model_name=document['model'],
            mode=ExecutionMode(document['mode']),
            layers=tuple(layers),
            setup=SetupCosts(
                memory_alloc_ms=float(setup_doc['memory_alloc_ms']),
                gpu_driver_init_ms=float(setup_doc.get('gpu_driver_init_ms', 0.0)),
            ),
        )
        validate_profile(profile)

        logger.debug(f"프로파일 로드 완료: {profile.model_name} (N={profile.n_layers}, mode={profile.mode.value})")
        return profile

    def load_profile(self, source: Union[bytes, str, IO]) -> ModelProfile:
        """
        바이트 스트림(또는 문자열, 파일 객체)에서 프로파일 로드

        Raises:
            ParseError: 문서 형식 오류
            ValidationError: 스키마/의미 검증 실패
        """
        return self.from_document(self._decode(source))

    def load_file(self, path: str) -> ModelProfile:
        """파일 경로에서 프로파일 로드"""
        try:
            with open(path, 'rb') as f:
                data = f.read()
        except OSError as e:
            raise ProfileError(f"cannot read profile '{path}': {e}") from e
        logger.info(f"프로파일 파일 읽기: {path}")
        return self.load_profile(data)


def profile_to_document(profile: ModelProfile) -> Dict[str, Any]:
    """ModelProfile 을 외부 JSON 형식 문서로 변환"""
    setup = {'memory_alloc_ms': profile.setup.memory_alloc_ms}
    if profile.mode is ExecutionMode.GPU:
        setup['gpu_driver_init_ms'] = profile.setup.gpu_driver_init_ms

    layers = []
    for layer in profile.layers:
        kernels = []
        for kernel in layer.candidates:
            costs = {
                'read_raw_ms': _class_doc(kernel.read_raw_ms),
                'read_cached_ms': _class_doc(kernel.read_cached_ms),
                'transform_ms': _class_doc(kernel.transform_ms),
                'execute_ms': _class_doc(kernel.execute_ms),
            }
            if kernel.pipeline_create is not None:
                costs['pipeline_create_ms'] = {
                    'hit': kernel.pipeline_create.hit_ms,
                    'miss': kernel.pipeline_create.miss_ms,
                }
            kernels.append({
                'id': kernel.kernel_id,
                'costs': costs,
                'bytes': {'raw': kernel.raw_bytes, 'cached': kernel.cached_bytes},
            })
        layers.append({
            'index': layer.layer_index,
            'op': layer.operator_name,
            'preds': sorted(layer.predecessors),
            'kernels': kernels,
        })

    return {
        'model': profile.model_name,
        'mode': profile.mode.value,
        'setup': setup,
        'layers': layers,
    }


def dump_profile(profile: ModelProfile) -> bytes:
    """ModelProfile 을 JSON 바이트로 직렬화"""
    return json.dumps(profile_to_document(profile), ensure_ascii=False, indent=2).encode('utf-8')


def load_profile(source: Union[bytes, str, IO], lenient: bool = False) -> ModelProfile:
    """편의 함수: ProfileLoader(lenient).load_profile(source)"""
    return ProfileLoader(lenient=lenient).load_profile(source)
