import pytest
from loguru import logger


@pytest.fixture(autouse=True)
def _reset_loguru():
    """main() 이 추가한 sink 가 캡처된 stderr 를 붙잡고 있지 않도록 정리"""
    yield
    logger.remove()
