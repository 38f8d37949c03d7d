#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Exceptions
프로파일 로딩, 스케줄링, 시뮬레이션 단계의 예외 계층
"""


class ColdSchedError(Exception):
    """모든 도메인 예외의 기본 클래스"""


class ProfileError(ColdSchedError):
    """프로파일 문서 관련 오류"""


class ParseError(ProfileError):
    """JSON 문서 파싱 실패"""


class ValidationError(ProfileError):
    """스키마 또는 의미 검증 실패"""


class ComboSpaceExceeded(ColdSchedError):
    """완전 탐색 조합 수가 상한을 넘음"""

    def __init__(self, combo_count: int, combo_cap: int):
        super().__init__(
            f"kernel combination space {combo_count} exceeds cap {combo_cap}; "
            f"use --combo-strategy greedy or beam:K"
        )
        self.combo_count = combo_count
        self.combo_cap = combo_cap


class DeadlockDetected(ColdSchedError):
    """시뮬레이션이 더 이상 진행할 수 없음 (잘못된 계획)"""

    def __init__(self, time_ms: float, blocked: dict):
        heads = ', '.join(f"{core}→op{op_id}" for core, op_id in sorted(blocked.items()))
        super().__init__(f"no runnable operation at t={time_ms:.6f} ms (heads: {heads or 'none'})")
        self.time_ms = time_ms
        self.blocked = dict(blocked)


class ModeMismatch(ColdSchedError):
    """CPU/GPU 모드 불일치"""


class LimitsExceeded(ColdSchedError):
    """오라클 탐색 한도 초과"""
