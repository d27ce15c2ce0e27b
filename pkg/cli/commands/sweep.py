"""sweep: 설정 키 하나를 값 목록으로 바꿔가며 실행 (K 민감도, 사영 방식 비교, GMM/PLE 비교)"""
import argparse
from pathlib import Path

from cli.common import add_config_arguments, config_from_args, echo, parse_list, print_run_header
from cli.commands.benchmark import resolve_workers
from dependencies.services import get_benchmark_service
from exceptions.common import ServiceException
from schemas.config import ReconstructionConfig
from schemas.results import ManifestEntry
from services.benchmark import SWEEP_CSV


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="설정 키 하나에 대한 파라미터 스윕")
    parser.add_argument("image", help="입력 영상 (P5/P6)")
    parser.add_argument("--csr", type=float, required=True, help="압축률")
    parser.add_argument("--param", required=True, help=f"스윕할 키 ({', '.join(ReconstructionConfig.valid_keys())})")
    parser.add_argument("--values", required=True, help="쉼표로 구분한 값 목록")
    parser.add_argument("--name", default=None, help="결과 CSV 의 영상 이름 (기본: 파일 이름)")
    parser.add_argument("--out-dir", "--out_dir", required=True, help="결과 폴더")
    parser.add_argument("--size", type=int, default=256, help="리사이즈 변 길이, 0 이면 원본 크기")
    parser.add_argument("--workers", type=int, default=None, help="동시 실행 수 (기본: CS_GMM_THREADS)")
    parser.add_argument("--color", action="store_true", help="RGB 영상을 채널별로 재구성 (기본: 휘도)")
    parser.add_argument("--no-timing", "--no_timing", action="store_true", help="시간 열을 0 으로 기록")
    add_config_arguments(parser)


def run(args: argparse.Namespace) -> int:
    if args.param not in ReconstructionConfig.valid_keys():
        raise ServiceException.unknown_config_key(args.param, ReconstructionConfig.valid_keys())
    values = parse_list(args.values, args.param, str)
    config = config_from_args(args)
    workers = resolve_workers(args.workers)
    print_run_header("sweep", config)

    entry = ManifestEntry(name=args.name or Path(args.image).stem, path=args.image)
    rows = get_benchmark_service(record_timing=not args.no_timing).run_sweep(
        entry,
        args.csr,
        config,
        args.param,
        values,
        out_dir=args.out_dir,
        size=args.size or None,
        workers=workers,
        gray=not args.color,
    )
    succeeded = sum(row.row.succeeded for row in rows)
    echo(f"rows={len(rows)} succeeded={succeeded} out={args.out_dir}/{SWEEP_CSV}")
    return 1 if rows and succeeded == 0 else 0
