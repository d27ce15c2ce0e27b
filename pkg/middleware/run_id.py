import uuid
from contextlib import contextmanager
from typing import Iterator, Optional

from loguru import logger


def new_run_id() -> str:
    return uuid.uuid4().hex[:8]


@contextmanager
def run_context(run_id: Optional[str] = None) -> Iterator[str]:
    """블록 안의 모든 로그에 run_id 를 붙인다"""
    run_id = run_id or new_run_id()
    with logger.contextualize(run_id=run_id):
        yield run_id

