"""
CLI 라우터
==========
서브커맨드마다 cli/commands/<name>.py 에 register(subparsers) 와 run(args) -> int 를 둔다.
"""
import argparse
from typing import Optional, Sequence

from cli.commands import benchmark, reconstruct, simulate, sweep
from core.config import settings

COMMANDS = {
    "simulate": simulate,
    "reconstruct": reconstruct,
    "benchmark": benchmark,
    "sweep": sweep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=settings.APP_NAME,
        description="순열 Hadamard 압축 센싱 영상 재구성 (ADMM-SLOPE / LR-GMM-SLOPE / LR-PLE-SLOPE)",
    )
    parser.add_argument("--log-level", default=None, help="loguru 로그 레벨 (기본: LOG_LEVEL 환경 변수)")
    parser.add_argument("-v", "--verbose", action="store_true", help="DEBUG 로그 출력")
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS.values():
        module.register(subparsers)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def dispatch(args: argparse.Namespace) -> int:
    return COMMANDS[args.command].run(args)
