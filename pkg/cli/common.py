"""서브커맨드 공통 인자 처리"""
import argparse
import sys
from typing import Any, Sequence

from core.config import build_config, load_config_file, settings
from exceptions.common import ServiceException
from schemas.config import ReconstructionConfig

CONFIG_DEST_PREFIX = "cfg__"


def add_config_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("재구성 설정")
    group.add_argument("--config", help="key=value 설정 파일")
    group.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="설정 파일 값을 덮어쓴다 (반복 가능)",
    )
    for key in ReconstructionConfig.valid_keys():
        options = dict.fromkeys([f"--{key}", f"--{key.replace('_', '-')}"])
        group.add_argument(*options, dest=f"{CONFIG_DEST_PREFIX}{key}", default=None, metavar="VALUE")


def _parse_set(items: Sequence[str]) -> dict[str, str]:
    values = {}
    for item in items:
        if "=" not in item:
            raise ServiceException.invalid_argument(f"--set 값은 KEY=VALUE 형식이어야 합니다: {item!r}")
        key, value = (part.strip() for part in item.split("=", 1))
        values[key] = value
    return values


def config_from_args(args: argparse.Namespace) -> ReconstructionConfig:
    """defaults < --config 파일 < --set < 개별 플래그"""
    file_layer = load_config_file(args.config) if args.config else {}
    flag_layer = {
        name[len(CONFIG_DEST_PREFIX):]: value
        for name, value in vars(args).items()
        if name.startswith(CONFIG_DEST_PREFIX)
    }
    return build_config(file_layer, _parse_set(args.set), flag_layer)


def parse_list(text: str, what: str, cast: Any = float) -> list[Any]:
    values = []
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        try:
            values.append(cast(token))
        except ValueError as exc:
            raise ServiceException.invalid_argument(f"잘못된 {what} 값: {token!r}") from exc
    if not values:
        raise ServiceException.invalid_argument(f"{what} 목록이 비어 있습니다")
    return values


def parse_csr_list(text: str) -> list[float]:
    values = parse_list(text, "csr")
    for value, token in zip(values, (t.strip() for t in text.split(",") if t.strip())):
        if not 0.0 < value <= 1.0:
            raise ServiceException.invalid_argument(f"잘못된 csr 값: {token!r} (유효 범위 0 < csr <= 1)")
    return values


def echo(message: str) -> None:
    """사람이 읽는 요약은 stderr 로. 기계용 출력은 파일에만 쓴다"""
    print(message, file=sys.stderr)


def print_run_header(command: str, config: ReconstructionConfig) -> None:
    echo(f"[{settings.APP_NAME} {command}] {config.echo()} config_hash={config.config_hash()}")

