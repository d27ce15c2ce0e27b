from dataclasses import dataclass

import numpy as np

from exceptions.common import ServiceException


@dataclass(eq=False)
class ImageBuffer:
    """[0,1] 범위 픽셀, channel-planar (C, H, W)"""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim == 2:
            pixels = pixels[np.newaxis]
        if pixels.ndim != 3 or pixels.shape[0] not in (1, 3):
            raise ServiceException.invalid_argument(f"채널 수는 1 또는 3 이어야 합니다: shape={pixels.shape}")
        if pixels.shape[1] < 1 or pixels.shape[2] < 1:
            raise ServiceException.invalid_argument(f"이미지 크기가 비어 있습니다: shape={pixels.shape}")
        self.pixels = pixels

    @property
    def channels(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[2])

    def channel(self, c: int) -> np.ndarray:
        """벡터화(row-major)된 채널 c"""
        return self.pixels[c].reshape(-1)

    @classmethod
    def from_channels(cls, channels: list[np.ndarray], height: int, width: int) -> "ImageBuffer":
        return cls(np.stack([np.reshape(ch, (height, width)) for ch in channels]))
