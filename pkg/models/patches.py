from dataclasses import dataclass

import numpy as np

from exceptions.common import ServiceException


@dataclass(frozen=True, eq=False)
class PatchGrid:
    image_height: int
    image_width: int
    patch_side: int
    stride: int
    origins: np.ndarray  # (N_p, 2) row-major 순서의 (row, col)
    indices: np.ndarray  # (P, N_p) 패치 i 의 픽셀 인덱스
    overlap_counts: np.ndarray  # R̃ 의 대각 성분

    @property
    def patch_dim(self) -> int:
        return self.patch_side * self.patch_side

    @property
    def patch_count(self) -> int:
        return int(self.origins.shape[0])

    @property
    def pixel_count(self) -> int:
        return self.image_height * self.image_width

    def same_geometry(self, other: "PatchGrid") -> bool:
        return (
            self is other
            or (
                self.image_height == other.image_height
                and self.image_width == other.image_width
                and self.patch_side == other.patch_side
                and self.stride == other.stride
            )
        )


@dataclass(eq=False)
class PatchSet:
    data: np.ndarray  # (P, N_p), 열 i 가 벡터화된 패치 i
    grid: PatchGrid

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[1] != self.grid.patch_count:
            raise ServiceException.dimension_mismatch(
                (self.grid.patch_dim, self.grid.patch_count), self.data.shape, "patch set"
            )

    def with_data(self, data: np.ndarray) -> "PatchSet":
        return PatchSet(data=data, grid=self.grid)
