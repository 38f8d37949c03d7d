#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Report Exporter
시뮬레이션 결과를 Gantt CSV / 요약 JSON 으로 내보내기
"""

import json
import logging
import os
from typing import Any, Dict

import pandas as pd

from processors.simulator import SimReport

logger = logging.getLogger(__name__)

GANTT_COLUMNS = ['op_id', 'layer', 'kind', 'core', 'start_ms', 'end_ms', 'stalled_ms', 'slowdown']


def gantt_frame(report: SimReport) -> pd.DataFrame:
    """타임라인을 (start_ms, op_id) 순으로 정렬한 DataFrame"""
    rows = [{
        'op_id': item.op_id,
        'layer': item.layer_index,
        'kind': item.kind,
        'core': item.core,
        'start_ms': item.start_ms,
        'end_ms': item.end_ms,
        'stalled_ms': item.stalled_ms,
        'slowdown': item.slowdown_factor,
    } for item in report.timeline]
    frame = pd.DataFrame(rows, columns=GANTT_COLUMNS)
    return frame.sort_values(['start_ms', 'op_id'], kind='mergesort').reset_index(drop=True)


def gantt_csv(report: SimReport) -> str:
    return gantt_frame(report).to_csv(index=False, float_format='%.6f', lineterminator='\n')


def summary(report: SimReport) -> Dict[str, Any]:
    """makespan, 단계별 합계, 코어별 유휴 시간, steal 목록"""
    totals = report.stage_totals()
    return {
        'makespan_ms': round(report.makespan_ms, 6),
        'stage_totals_ms': {kind: round(value, 6) for kind, value in totals.items()},
        'idle_ms': {core: round(value, 6) for core, value in report.per_core_idle_ms.items()},
        'steals': [
            {'op_id': s.op_id, 'layer': s.layer_index, 'from': s.from_core, 'to': s.to_core,
             'time_ms': round(s.time_ms, 6)}
            for s in report.steals
        ],
        'storage_overhead_bytes': report.storage_overhead_bytes,
    }


def to_json(payload: Dict[str, Any]) -> str:
    """결정적 JSON 직렬화 (키 정렬)"""
    return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True) + '\n'


def write_text(path: str, text: str) -> str:
    """
    텍스트 파일 저장 (상위 디렉토리 생성)

    Raises:
        OSError: 쓰기 실패
    """
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(text)
    logger.info(f"파일 저장 완료: {path} ({len(text)} bytes)")
    return path


def load_report(path: str) -> SimReport:
    """to_json(report.to_dict()) 로 저장한 보고서 읽기"""
    with open(path, 'r', encoding='utf-8') as f:
        return SimReport.from_dict(json.load(f))
