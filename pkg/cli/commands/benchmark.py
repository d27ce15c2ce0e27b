"""benchmark: manifest × CSr × 알고리즘 → benchmark.csv + traces/"""
import argparse

from cli.common import add_config_arguments, config_from_args, echo, parse_csr_list, parse_list, print_run_header
from core.config import settings
from dependencies.services import get_benchmark_service
from exceptions.common import ServiceException
from schemas.common import Algorithm
from services.benchmark import BENCHMARK_CSV, load_manifest


def register(subparsers) -> None:
    parser = subparsers.add_parser("benchmark", help="영상 목록 × CSr 격자 벤치마크")
    parser.add_argument("manifest", help="한 줄에 영상 경로 하나 (name=path 가능)")
    parser.add_argument("--csr", required=True, help="쉼표로 구분한 CSr 목록 (예: 0.03,0.05,0.1)")
    parser.add_argument("--algorithms", help="쉼표로 구분한 알고리즘 목록 (기본: --algorithm)")
    parser.add_argument("--out-dir", "--out_dir", required=True, help="결과 폴더")
    parser.add_argument("--size", type=int, default=256, help="리사이즈 변 길이, 0 이면 원본 크기")
    parser.add_argument("--workers", type=int, default=None, help="동시 실행 수 (기본: CS_GMM_THREADS)")
    parser.add_argument("--color", action="store_true", help="RGB 영상을 채널별로 재구성 (기본: 휘도)")
    parser.add_argument("--no-timing", "--no_timing", action="store_true", help="시간 열을 0 으로 기록")
    add_config_arguments(parser)


def parse_algorithms(text: str) -> list[Algorithm]:
    valid = [a.value for a in Algorithm]

    def cast(token: str) -> Algorithm:
        if token not in valid:
            raise ValueError(token)
        return Algorithm(token)

    try:
        return parse_list(text, "algorithm", cast)
    except ServiceException as exc:
        raise ServiceException.invalid_argument(f"{exc.message} (사용 가능: {', '.join(valid)})") from exc


def resolve_workers(requested: int | None) -> int:
    if requested is None:
        return settings.worker_count
    if requested < 1:
        raise ServiceException.invalid_argument(f"workers 는 1 이상이어야 합니다 ({requested})")
    return min(requested, settings.worker_count)


def run(args: argparse.Namespace) -> int:
    csr_grid = parse_csr_list(args.csr)
    algorithms = parse_algorithms(args.algorithms) if args.algorithms else None
    config = config_from_args(args)
    workers = resolve_workers(args.workers)
    print_run_header("benchmark", config)

    entries = load_manifest(args.manifest)
    rows = get_benchmark_service(record_timing=not args.no_timing).run_benchmark(
        entries,
        csr_grid,
        config,
        algorithms=algorithms,
        out_dir=args.out_dir,
        size=args.size or None,
        workers=workers,
        gray=not args.color,
    )
    succeeded = sum(row.succeeded for row in rows)
    echo(f"rows={len(rows)} succeeded={succeeded} out={args.out_dir}/{BENCHMARK_CSV}")
    return 1 if rows and succeeded == 0 else 0
