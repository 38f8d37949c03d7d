#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Cold Inference Scheduler - Command Line Interface
plan / simulate / ablate / oracle / export-gantt 서브커맨드

stdout 에는 JSON/CSV 결과만, 진단 로그는 stderr 로 출력한다.
"""

import argparse
import logging
import os
import sys
from dataclasses import replace
from typing import Any, Dict, List, Optional

import colorlog

from collectors.candidate_filter import CandidateFilter, default_combo
from collectors.operation_graph import build_operation_graph
from collectors.profile_model import ExecutionMode, ModelProfile
from collectors.synthetic_profiles import random_little_cores, random_profile
from config import Config, get_config
from exceptions import ColdSchedError, ComboSpaceExceeded, ModeMismatch, ValidationError
from processors.oracle import OracleLimits, ScheduleOracle, sequential_baseline
from processors.pipeline import ColdInferencePipeline
from processors.report_exporter import gantt_csv, load_report, summary, to_json, write_text
from processors.scheduler import KernelScheduler, SchedulerConfig, parse_strategy
from processors.simulator import PlatformConfig, load_background_trace

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_COMBO_SPACE = 3
EXIT_IO = 4


class OutputError(Exception):
    """결과 파일 입출력 실패 (exit 4)"""


def setup_logging(config: Config, verbose: bool = False):
    """stderr 컬러 로그 + (선택) 파일 로그"""
    level = logging.DEBUG if verbose else getattr(logging, str(config.LOG_LEVEL).upper(), logging.INFO)
    handler = colorlog.StreamHandler(sys.stderr)
    handler.setFormatter(colorlog.ColoredFormatter(
        '%(log_color)s%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        log_colors={
            'DEBUG': 'cyan',
            'INFO': 'green',
            'WARNING': 'yellow',
            'ERROR': 'red',
            'CRITICAL': 'red,bg_white',
        },
    ))
    handlers: List[logging.Handler] = [handler]
    if config.LOG_TO_FILE:
        os.makedirs(config.LOG_DIR, exist_ok=True)
        file_handler = logging.FileHandler(config.LOG_FILE, encoding='utf-8')
        file_handler.setFormatter(logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s'))
        handlers.append(file_handler)
    logging.basicConfig(level=level, handlers=handlers, force=True)


def build_platform(args: argparse.Namespace, config: Config) -> PlatformConfig:
    platform = PlatformConfig.from_config(
        config,
        little_cores=args.little,
        big_cores=args.big,
        disk_capacity=args.disk_cap,
        mem_capacity=args.mem_cap,
    )
    if args.load:
        platform = platform.with_load(load_background_trace(args.load))
    return platform


def build_pipeline(args: argparse.Namespace, config: Config) -> ColdInferencePipeline:
    strategy, width = parse_strategy(args.combo_strategy or config.COMBO_STRATEGY)
    scheduler_config = SchedulerConfig.from_config(config, combo_strategy=strategy, beam_width=width)
    return ColdInferencePipeline(config, build_platform(args, config), scheduler_config, lenient=args.lenient)


def load_checked_profile(pipeline: ColdInferencePipeline, args: argparse.Namespace) -> ModelProfile:
    profile = pipeline.step1_load_profile(args.profile)
    if args.gpu and profile.mode is not ExecutionMode.GPU:
        raise ModeMismatch(f"--gpu given but '{args.profile}' is a {profile.mode.value}-mode profile")
    return profile


def emit(text: str, out: Optional[str] = None):
    """결과를 파일 또는 stdout 으로 출력"""
    if out:
        try:
            write_text(out, text)
        except OSError as e:
            raise OutputError(f"cannot write '{out}': {e}") from e
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def cmd_plan(args: argparse.Namespace, config: Config) -> int:
    """계획 생성 (--continuous 이면 웜 전환 계획 포함)"""
    pipeline = build_pipeline(args, config)
    profile = load_checked_profile(pipeline, args)
    allow_cache = not args.no_cache
    shader_cache = args.shader_cache == 'on'

    plan = pipeline.step2_generate_plan(profile, allow_cache, shader_cache)
    payload: Dict[str, Any] = {'plan': plan.to_dict()}
    if args.explain:
        candidate_filter = CandidateFilter(config, profile.mode, allow_cache, shader_cache)
        payload['fronts'] = [[score.to_dict() for score in front] for front in candidate_filter.fronts(profile)]
    if args.continuous:
        _, report = pipeline.step3_simulate(profile, plan, shader_cache)
        payload.update(pipeline.step4_warm_switch(profile, plan, report, allow_cache, shader_cache))
    emit(to_json(payload), args.out)
    return EXIT_OK


def _simulate(args: argparse.Namespace, config: Config):
    pipeline = build_pipeline(args, config)
    profile = load_checked_profile(pipeline, args)
    shader_cache = args.shader_cache == 'on'
    plan = pipeline.step2_generate_plan(profile, not args.no_cache, shader_cache)
    _, report = pipeline.step3_simulate(profile, plan, shader_cache, stealing=args.steal == 'on')
    return plan, report


def cmd_simulate(args: argparse.Namespace, config: Config) -> int:
    """계획 + 시뮬레이션 요약 (--report 로 전체 보고서 저장)"""
    plan, report = _simulate(args, config)
    if args.report:
        try:
            write_text(args.report, to_json(report.to_dict()))
        except OSError as e:
            raise OutputError(f"cannot write '{args.report}': {e}") from e
    emit(to_json({'plan': plan.to_dict(), 'summary': summary(report)}), args.out)
    return EXIT_OK


def cmd_ablate(args: argparse.Namespace, config: Config) -> int:
    """baseline / K / K+C / K+C+P makespan 표"""
    pipeline = build_pipeline(args, config)
    profile = load_checked_profile(pipeline, args)
    emit(to_json({'model': profile.model_name, 'rows': pipeline.run_ablation(profile)}), args.out)
    return EXIT_OK


def _oracle_row(profile: ModelProfile, platform: PlatformConfig, config: Config,
                scheduler: KernelScheduler, oracle: ScheduleOracle, combo=None) -> Dict[str, Any]:
    combo = list(combo or default_combo(profile))
    graph = build_operation_graph(profile, [score.variant for score in combo])
    heuristic = scheduler.schedule_combination(graph, combo, platform).predicted_makespan_ms
    result = oracle.optimal_schedule(graph, platform, OracleLimits.from_config(config), combo)
    sequential = sequential_baseline(profile, combo)
    return {
        'model': profile.model_name,
        'little_cores': platform.little_cores,
        'big_cores': platform.big_cores,
        'disk_capacity': platform.disk_capacity,
        'mem_capacity': platform.mem_capacity,
        'optimal_ms': round(result.makespan_ms, 6),
        'heuristic_ms': round(heuristic, 6),
        'sequential_ms': round(sequential, 6),
        'gap_ratio': round(heuristic / result.makespan_ms, 6) if result.makespan_ms > 0 else 1.0,
        'optimal': result.optimal,
    }


def cmd_oracle(args: argparse.Namespace, config: Config) -> int:
    """
    최적 vs 휴리스틱 비교

    프로파일을 주면 계획이 고른 조합으로, 없으면 --seed 부터 --instances 개의 무작위 인스턴스로 비교.
    """
    platform = build_platform(args, config)
    scheduler = KernelScheduler(config)
    oracle = ScheduleOracle(config, scheduler.simulator)

    if args.profile:
        pipeline = build_pipeline(args, config)
        profile = load_checked_profile(pipeline, args)
        plan = pipeline.step2_generate_plan(profile, not args.no_cache)
        rows = [_oracle_row(profile, platform, config, scheduler, oracle, plan.combo)]
    else:
        rows = []
        for seed in range(args.seed, args.seed + args.instances):
            profile = random_profile(seed)
            # --big, --disk-cap, --mem-cap 은 그대로, little 코어 수만 인스턴스별
            instance = replace(platform.without_load(), little_cores=random_little_cores(seed))
            rows.append(_oracle_row(profile, instance, config, scheduler, oracle))

    tol = 1e-6
    holds = sum(1 for row in rows if row['optimal_ms'] <= row['heuristic_ms'] + tol <= row['sequential_ms'] + 2 * tol)
    emit(to_json({'instances': rows, 'sandwich_holds': holds, 'total': len(rows)}), args.out)
    return EXIT_OK


def cmd_export_gantt(args: argparse.Namespace, config: Config) -> int:
    """Gantt CSV 내보내기 (저장된 보고서 또는 즉석 시뮬레이션)"""
    if args.report:
        try:
            report = load_report(args.report)
        except (OSError, ValueError, KeyError) as e:
            raise OutputError(f"cannot read report '{args.report}': {e}") from e
    elif args.profile:
        _, report = _simulate(args, config)
    else:
        raise ValidationError("export-gantt needs a profile or --report")
    emit(gantt_csv(report), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', default=None, choices=['development', 'production', 'testing'],
                        help='설정 환경 (기본: COLDSCHED_ENV)')
    common.add_argument('--little', type=int, default=None, help='little 코어 수 M_l')
    common.add_argument('--big', type=int, default=None, help='big 코어 수 M_b')
    common.add_argument('--disk-cap', type=float, default=None, help='디스크 I/O 경합 용량')
    common.add_argument('--mem-cap', type=float, default=None, help='메모리 I/O 경합 용량')
    common.add_argument('--load', default=None, help='배경 부하 trace JSON')
    common.add_argument('--steal', choices=['on', 'off'], default='off', help='workload stealing')
    common.add_argument('--gpu', action='store_true', help='GPU 모드 프로파일 요구')
    common.add_argument('--shader-cache', choices=['on', 'off'], default='off', help='GPU shader 캐시')
    common.add_argument('--no-cache', action='store_true', help='변환 가중치 캐시 변형 제외')
    common.add_argument('--combo-strategy', default=None, help='exhaustive | greedy | beam:K')
    common.add_argument('--seed', type=int, default=0, help='oracle 무작위 인스턴스 시드')
    common.add_argument('--lenient', action='store_true', help='프로파일의 알려지지 않은 필드 허용')
    common.add_argument('--out', default=None, help='결과 파일 (기본: stdout)')
    common.add_argument('--verbose', '-v', action='store_true', help='상세 로그 출력')

    parser = argparse.ArgumentParser(description='Cold Inference Scheduler')
    sub = parser.add_subparsers(dest='command', required=True)

    plan = sub.add_parser('plan', parents=[common], help='커널 선택 + 배치 계획')
    plan.add_argument('profile')
    plan.add_argument('--continuous', action='store_true', help='웜 커널 전환 계획 포함')
    plan.add_argument('--explain', action='store_true', help='레이어별 파레토 프런트 포함')
    plan.set_defaults(handler=cmd_plan)

    simulate = sub.add_parser('simulate', parents=[common], help='계획 시뮬레이션 요약')
    simulate.add_argument('profile')
    simulate.add_argument('--report', default=None, help='전체 보고서 JSON 저장 경로')
    simulate.set_defaults(handler=cmd_simulate)

    ablate = sub.add_parser('ablate', parents=[common], help='baseline / K / K+C / K+C+P')
    ablate.add_argument('profile')
    ablate.set_defaults(handler=cmd_ablate)

    oracle = sub.add_parser('oracle', parents=[common], help='최적 vs 휴리스틱 비교')
    oracle.add_argument('profile', nargs='?', default=None)
    oracle.add_argument('--instances', type=int, default=200, help='무작위 인스턴스 수')
    oracle.set_defaults(handler=cmd_oracle)

    gantt = sub.add_parser('export-gantt', parents=[common], help='Gantt CSV 내보내기')
    gantt.add_argument('profile', nargs='?', default=None)
    gantt.add_argument('--report', default=None, help='simulate --report 로 저장한 보고서')
    gantt.set_defaults(handler=cmd_export_gantt)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """메인 함수: 예외를 종료 코드로 변환"""
    args = build_parser().parse_args(argv)
    config = get_config(args.config)()
    setup_logging(config, args.verbose)

    try:
        return args.handler(args, config)
    except ComboSpaceExceeded as e:
        logger.error(f"조합 공간 초과: {e}")
        return EXIT_COMBO_SPACE
    except OutputError as e:
        logger.error(f"입출력 오류: {e}")
        return EXIT_IO
    except ColdSchedError as e:
        logger.error(f"검증 오류: {e}")
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        logger.info("사용자에 의해 중단되었습니다.")
        return 130


if __name__ == '__main__':
    sys.exit(main())
