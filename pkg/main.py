"""
lrgmm-cs 진입점
===============
    python main.py simulate image.pgm --csr 0.1 --out y.bin
    python main.py reconstruct y.bin --out x.pgm --reference image.pgm

종료 코드: 0 성공, 1 실행 중 오류, 2 사용법/인자 오류
"""
import sys
from typing import Optional, Sequence

from loguru import logger

from cli.router import dispatch, parse_args
from core.config import settings
from core.logging import setup_logging
from exceptions.common import ServiceException
from middleware.run_id import run_context


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        # argparse 는 사용법 오류에 2, --help 에 0 으로 종료한다
        return exc.code if isinstance(exc.code, int) else 2

    setup_logging("DEBUG" if args.verbose else args.log_level)
    with run_context() as run_id:
        logger.info("{} {} 시작 (ENVIRONMENT={})", settings.APP_NAME, args.command, settings.ENVIRONMENT)
        try:
            code = dispatch(args)
        except ServiceException as exc:
            logger.error("서비스 예외 발생: {} - {}", exc.error_code.value, exc.message)
            print(f"error: {exc.error_code.value}: {exc.message}", file=sys.stderr)
            return exc.exit_code
        except Exception as exc:
            logger.exception("처리되지 않은 예외 (run_id={}): {}", run_id, exc)
            print(f"error: INTERNAL_ERROR: {exc}", file=sys.stderr)
            return 1
        logger.info("{} 종료 (exit={})", args.command, code)
        return code


if __name__ == "__main__":
    sys.exit(main())
