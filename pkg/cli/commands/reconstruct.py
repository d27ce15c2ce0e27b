"""reconstruct: 측정 파일 → 재구성 영상 (+ trace CSV, GMM 스냅샷)"""
import argparse

from loguru import logger

from cli.common import add_config_arguments, config_from_args, echo, print_run_header
from dependencies.repositories import (
    get_image_repository,
    get_measurement_repository,
    get_model_repository,
    get_result_repository,
)
from dependencies.services import get_reconstruction_service
from exceptions.common import ServiceException
from schemas.common import Algorithm
from services import metrics


def register(subparsers) -> None:
    parser = subparsers.add_parser("reconstruct", help="측정 파일에서 영상 재구성")
    parser.add_argument("measurement", help="CSMEAS1 측정 파일 (바이너리 또는 텍스트)")
    parser.add_argument("--out", required=True, help="출력 영상 (1채널 P5, 3채널 P6)")
    parser.add_argument("--reference", help="PSNR 계산용 원본 영상")
    parser.add_argument("--trace-out", "--trace_out", help="반복별 trace CSV")
    parser.add_argument("--model-out", "--model_out", help="최종 저랭크 GMM 스냅샷 (lr-gmm-slope)")
    parser.add_argument("--model-in", "--model_in", help="첫 EM 의 warm start 로 쓸 GMM 스냅샷")
    parser.add_argument("--no-timing", "--no_timing", action="store_true", help="trace 의 시간 열을 0 으로 기록")
    add_config_arguments(parser)


def run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.model_out and config.algorithm != Algorithm.LR_GMM_SLOPE:
        raise ServiceException.invalid_argument("--model-out 은 lr-gmm-slope 에서만 쓸 수 있습니다")
    print_run_header("reconstruct", config)

    measurements = get_measurement_repository().get(args.measurement)
    image_repo = get_image_repository()
    reference = None
    if args.reference:
        reference = image_repo.get(args.reference)
        if len(measurements) == 1 and reference.channels == 3:
            reference = metrics.to_grayscale(reference)
    initial_model = get_model_repository().get(args.model_in) if args.model_in else None

    service = get_reconstruction_service(record_timing=not args.no_timing)
    result = service.reconstruct(measurements, config, reference=reference, initial_model=initial_model)

    image_repo.save(result.image, args.out)
    if args.trace_out:
        get_result_repository().save_trace(result.trace, args.trace_out)
    if args.model_out:
        if result.models and result.models[0] is not None:
            get_model_repository().save(result.models[0], args.model_out)
        else:
            logger.warning("반복이 없어 저장할 GMM 이 없습니다: {}", args.model_out)

    summary = f"iterations={result.iterations_run} out={args.out}"
    if reference is not None:
        summary += (
            f" psnr_db={metrics.psnr(reference, result.image):.4f}"
            f" warm_start_psnr_db={result.warm_start_psnr_db:.4f}"
        )
    echo(summary)
    return 0
