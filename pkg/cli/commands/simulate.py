"""simulate: 영상 → CSMEAS1 측정 파일"""
import argparse

from loguru import logger

from cli.common import echo
from dependencies.repositories import get_image_repository, get_measurement_repository
from exceptions.common import ServiceException
from services import metrics, sensing


def register(subparsers) -> None:
    parser = subparsers.add_parser("simulate", help="영상을 순열 Hadamard 연산자로 측정")
    parser.add_argument("image", help="입력 영상 (P5/P6)")
    parser.add_argument("--csr", type=float, required=True, help="압축률 M/N (0 < csr <= 1)")
    parser.add_argument("--seed", type=int, default=0, help="연산자 치환 시드")
    parser.add_argument("--out", required=True, help="출력 측정 파일")
    parser.add_argument("--noise-sigma", "--noise_sigma", type=float, default=0.0, help="측정 가우시안 잡음 표준편차")
    parser.add_argument("--noise-seed", "--noise_seed", type=int, default=0, help="잡음 시드")
    parser.add_argument("--size", type=int, default=None, help="면적 평균으로 size×size 리사이즈")
    parser.add_argument("--gray", action="store_true", help="RGB 를 휘도로 변환해 1채널로 측정")
    parser.add_argument("--text", action="store_true", help="텍스트 형식으로 저장")


def run(args: argparse.Namespace) -> int:
    if not 0.0 < args.csr <= 1.0:
        raise ServiceException.invalid_argument(f"csr 는 0 < csr <= 1 범위여야 합니다 (csr={args.csr})")
    if args.seed < 0:
        raise ServiceException.invalid_argument(f"seed 는 음수일 수 없습니다 ({args.seed})")

    image = get_image_repository().get(args.image)
    if args.gray:
        image = metrics.to_grayscale(image)
    if args.size is not None:
        image = metrics.resize_area(image, args.size)

    op = sensing.build_operator(image.height * image.width, args.csr, args.seed)
    measurements = [
        sensing.measure(
            op,
            image.channel(c),
            noise_sigma=args.noise_sigma,
            # 채널마다 다른 잡음 실현
            noise_seed=args.noise_seed + c,
            height=image.height,
            width=image.width,
            channel=c,
        )
        for c in range(image.channels)
    ]
    get_measurement_repository(text=args.text).save(measurements, args.out)
    logger.info("측정 저장: {} (채널 {}개)", args.out, len(measurements))
    echo(
        f"M={op.num_rows} N={op.order} operator_seed={op.seed} "
        f"image={image.height}x{image.width}x{image.channels} csr={args.csr:g}"
    )
    return 0
