"""PSNR, 그레이스케일 변환, 면적 평균 리사이즈"""
import math

import numpy as np
from PIL import Image

from exceptions.common import ServiceException
from models.image import ImageBuffer

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
PEAK = 1.0


def _pixels(image: ImageBuffer | np.ndarray) -> np.ndarray:
    if isinstance(image, ImageBuffer):
        return image.pixels
    return np.asarray(image, dtype=np.float64)


def psnr_from_error(squared_error: float, count: int) -> float:
    """10·log10(MAX²/MSE). 오차가 0 이면 +inf"""
    if count <= 0:
        raise ServiceException.invalid_argument("PSNR 계산 대상 픽셀이 없습니다")
    if squared_error <= 0.0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK * count / squared_error)


def squared_error(reference: ImageBuffer | np.ndarray, test: ImageBuffer | np.ndarray) -> float:
    ref, out = _pixels(reference), _pixels(test)
    if ref.shape != out.shape:
        raise ServiceException.dimension_mismatch(ref.shape, out.shape, "image")
    return float(np.sum((ref - out) ** 2))


def psnr(reference: ImageBuffer | np.ndarray, test: ImageBuffer | np.ndarray) -> float:
    """MAX=1.0 척도의 PSNR(dB). MSE 는 모든 픽셀과 채널에 대해 계산"""
    return psnr_from_error(squared_error(reference, test), _pixels(reference).size)


def to_grayscale(image: ImageBuffer) -> ImageBuffer:
    if image.channels == 1:
        return image
    return ImageBuffer(np.tensordot(LUMA_WEIGHTS, image.pixels, axes=1))


def resize_area(image: ImageBuffer, size: int | tuple[int, int]) -> ImageBuffer:
    """채널별 Pillow BOX 필터(면적 평균) 리사이즈. size 는 정사각 변 또는 (height, width)"""
    height, width = (size, size) if isinstance(size, int) else size
    if height < 1 or width < 1:
        raise ServiceException.invalid_argument(f"리사이즈 크기는 양수여야 합니다 ({size})")
    if (image.height, image.width) == (height, width):
        return image
    channels = [
        np.asarray(
            Image.fromarray(plane.astype(np.float32)).resize((width, height), Image.Resampling.BOX),
            dtype=np.float64,
        )
        for plane in image.pixels
    ]
    return ImageBuffer(np.clip(np.stack(channels), 0.0, 1.0))
