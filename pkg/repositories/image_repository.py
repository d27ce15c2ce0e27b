"""Netpbm 바이너리 영상 (P5 그레이스케일, P6 RGB). 디코딩/인코딩은 Pillow PPM 플러그인"""
import io
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from exceptions.common import ServiceException
from models.image import ImageBuffer
from repositories.base_repository import BaseRepository

SUPPORTED_MAGIC = (b"P5", b"P6")
# Pillow 가 maxval 에 맞춰 스케일한 뒤의 최댓값 (16비트는 모드 I 계열)
FULL_SCALE = {"L": 255.0, "RGB": 255.0}
FULL_SCALE_16BIT = 65535.0


def decode_netpbm(data: bytes) -> ImageBuffer:
    magic = data[:2]
    if magic not in SUPPORTED_MAGIC:
        if len(data) < 2:
            raise ServiceException.header_parse("Netpbm 헤더가 잘렸습니다")
        raise ServiceException.unsupported_format(f"P5/P6 만 지원합니다 (magic={magic!r})")

    try:
        image = Image.open(io.BytesIO(data), formats=["PPM"])
    except (UnidentifiedImageError, ValueError, SyntaxError, OSError) as exc:
        raise ServiceException.header_parse(f"Netpbm 헤더를 해석할 수 없습니다: {exc}") from exc

    try:
        image.load()
    except (OSError, ValueError) as exc:
        raise ServiceException.truncated_file(f"래스터가 잘렸습니다: {exc}") from exc

    scale = FULL_SCALE.get(image.mode, FULL_SCALE_16BIT)
    samples = np.asarray(image, dtype=np.float64)
    if samples.ndim == 2:
        samples = samples[:, :, np.newaxis]
    return ImageBuffer(np.clip(samples.transpose(2, 0, 1) / scale, 0.0, 1.0))


def encode_netpbm(image: ImageBuffer) -> bytes:
    samples = np.rint(np.clip(image.pixels, 0.0, 1.0) * 255.0).astype(np.uint8)
    if image.channels == 1:
        pil_image = Image.fromarray(samples[0])
    else:
        pil_image = Image.fromarray(np.ascontiguousarray(samples.transpose(1, 2, 0)))
    buffer = io.BytesIO()
    pil_image.save(buffer, format="PPM")
    return buffer.getvalue()


class ImageRepository(BaseRepository[ImageBuffer]):
    kind = "영상"

    def _read(self, path: Path) -> ImageBuffer:
        return decode_netpbm(path.read_bytes())

    def _write(self, obj: ImageBuffer) -> bytes:
        return encode_netpbm(obj)
