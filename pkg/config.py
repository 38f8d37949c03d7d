#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Configuration Module
환경 변수와 설정 관리
"""

import os
from dotenv import load_dotenv

# 환경 변수 로드
load_dotenv()


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ('1', 'true', 'yes', 'on')


class Config:
    """기본 설정 클래스"""

    # 플랫폼 설정 (big.LITTLE 코어 구성)
    LITTLE_CORES = int(os.getenv('LITTLE_CORES', 4))
    BIG_CORES = int(os.getenv('BIG_CORES', 4))

    # 디스크/메모리 I/O 경합 용량 (보정용 파라미터, 측정값 아님)
    DISK_CAPACITY = float(os.getenv('DISK_CAPACITY', 1.5))
    MEM_CAPACITY = float(os.getenv('MEM_CAPACITY', 3.0))

    # 스케줄러 설정
    EPSILON_FLOOR_MS = float(os.getenv('EPSILON_FLOOR_MS', 0.1))
    EPSILON_RATIO = float(os.getenv('EPSILON_RATIO', 0.01))
    BALANCE_ITERS_PER_LAYER = int(os.getenv('BALANCE_ITERS_PER_LAYER', 16))
    STRICT_INSERTION = _env_bool('STRICT_INSERTION', 'false')

    # 커널 조합 탐색 설정
    COMBO_STRATEGY = os.getenv('COMBO_STRATEGY', 'exhaustive')
    COMBO_CAP = int(os.getenv('COMBO_CAP', 4096))
    BEAM_WIDTH = int(os.getenv('BEAM_WIDTH', 8))
    PLAN_WORKERS = int(os.getenv('PLAN_WORKERS', 1))

    # 오라클(완전 탐색) 제한
    ORACLE_MAX_OPS = int(os.getenv('ORACLE_MAX_OPS', 12))
    ORACLE_MAX_CORES = int(os.getenv('ORACLE_MAX_CORES', 3))
    ORACLE_TIME_BUDGET_MS = int(os.getenv('ORACLE_TIME_BUDGET_MS', 10000))
    ORACLE_PERMUTE_QUEUES = _env_bool('ORACLE_PERMUTE_QUEUES', 'true')

    # 시간 비교 허용 오차 (ms)
    TIME_TOLERANCE_MS = 1e-9

    # 파일 경로
    DATA_DIR = 'data'
    PROFILES_DIR = os.path.join(DATA_DIR, 'profiles')
    LOADS_DIR = os.path.join(DATA_DIR, 'loads')
    LOG_DIR = 'logs'
    LOG_FILE = os.path.join(LOG_DIR, 'coldsched.log')

    # 로깅 설정
    LOG_LEVEL = os.getenv('LOG_LEVEL', 'INFO')
    LOG_TO_FILE = _env_bool('LOG_TO_FILE', 'false')


class DevelopmentConfig(Config):
    """개발 환경 설정"""
    LOG_LEVEL = 'DEBUG'


class ProductionConfig(Config):
    """프로덕션 환경 설정"""
    LOG_LEVEL = 'INFO'
    LOG_TO_FILE = True

    # 대량 조합 평가는 프로세스 풀 사용
    PLAN_WORKERS = int(os.getenv('PLAN_WORKERS', 4))


class TestingConfig(Config):
    """테스트 환경 설정"""
    TESTING = True
    LOG_LEVEL = 'WARNING'
    LOG_TO_FILE = False

    # 테스트는 작은 코어 구성과 짧은 예산 사용
    LITTLE_CORES = 2
    BIG_CORES = 4
    ORACLE_TIME_BUDGET_MS = 5000


# 환경별 설정 매핑
config_by_name = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig
}


def get_config(name: str = None):
    """현재 환경에 맞는 설정 반환"""
    env = name or os.getenv('COLDSCHED_ENV', 'development')
    return config_by_name.get(env, DevelopmentConfig)
