import numpy as np
import pytest
from loguru import logger

from models.image import ImageBuffer
from repositories.image_repository import encode_netpbm


def piecewise_constant(height: int = 32, width: int = 32) -> np.ndarray:
    """사각형 몇 개로 이루어진 합성 영상. 값이 k/255 라 8-bit 저장에 손실이 없다"""
    image = np.full((height, width), 51 / 255)
    image[height // 8: height // 2, width // 8: width // 2] = 204 / 255
    image[height // 2: 7 * height // 8, width // 3: 5 * width // 6] = 140 / 255
    image[: height // 4, 3 * width // 4:] = 242 / 255
    return image


def textured(height: int = 64, width: int = 64) -> np.ndarray:
    rows, cols = np.mgrid[0:height, 0:width]
    image = (
        0.5
        + 0.25 * np.sin(2 * np.pi * rows / 16.0) * np.cos(2 * np.pi * cols / 21.0)
        + 0.15 * (cols / width - 0.5)
    )
    image[height // 4: height // 2, width // 4: width // 2] += 0.1
    return np.clip(image, 0.0, 1.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture
def piecewise_image() -> np.ndarray:
    return piecewise_constant()


@pytest.fixture
def textured_image() -> np.ndarray:
    return textured()


@pytest.fixture
def write_image(tmp_path):
    """ImageBuffer 또는 (H, W) 배열을 Netpbm 파일로 쓰는 헬퍼"""

    def _write(pixels, name: str = "image.pgm"):
        image = pixels if isinstance(pixels, ImageBuffer) else ImageBuffer(np.asarray(pixels))
        path = tmp_path / name
        path.write_bytes(encode_netpbm(image))
        return path

    return _write


@pytest.fixture
def settings_override(monkeypatch):
    """core.config.settings 값을 테스트 동안만 바꾼다"""
    from core.config import settings

    def _override(**values):
        for key, value in values.items():
            monkeypatch.setattr(settings, key, value)
        return settings

    return _override


@pytest.fixture
def log_records():
    """테스트 동안 남은 loguru 레코드"""
    records = []
    handler = logger.add(lambda message: records.append(message.record), level="DEBUG")
    yield records
    logger.remove(handler)
