"""겹치는 √P×√P 패치의 추출(R_i), 집계(Σ R_iᵀ), 겹침 수 R̃"""
import numpy as np

from exceptions.common import ServiceException
from models.patches import PatchGrid, PatchSet


def _origins_1d(length: int, patch_side: int, stride: int) -> np.ndarray:
    starts = list(range(0, length - patch_side + 1, stride))
    last = length - patch_side
    if starts[-1] != last:
        starts.append(last)
    return np.asarray(starts, dtype=np.int64)


def build_grid(h: int, w: int, patch_side: int, stride: int) -> PatchGrid:
    if patch_side < 1 or stride < 1:
        raise ServiceException.invalid_argument(
            f"patch_side 와 stride 는 1 이상이어야 합니다 ({patch_side}, {stride})"
        )
    if patch_side > min(h, w):
        raise ServiceException.invalid_argument(
            f"패치({patch_side}x{patch_side})가 영상({h}x{w})보다 큽니다"
        )

    rows = _origins_1d(h, patch_side, stride)
    cols = _origins_1d(w, patch_side, stride)
    origins = np.stack(np.meshgrid(rows, cols, indexing="ij"), axis=-1).reshape(-1, 2)

    offsets = np.arange(patch_side)
    # 패치 내부 row-major: (dr, dc) → dr * w + dc
    local = (offsets[:, None] * w + offsets[None, :]).reshape(-1)
    base = origins[:, 0] * w + origins[:, 1]
    indices = local[:, None] + base[None, :]

    overlap_counts = np.bincount(indices.ravel(), minlength=h * w).astype(np.float64)
    for array in (origins, indices, overlap_counts):
        array.flags.writeable = False

    return PatchGrid(
        image_height=h,
        image_width=w,
        patch_side=patch_side,
        stride=stride,
        origins=origins,
        indices=indices,
        overlap_counts=overlap_counts,
    )


def extract(grid: PatchGrid, x: np.ndarray) -> PatchSet:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != grid.pixel_count:
        raise ServiceException.dimension_mismatch(grid.pixel_count, x.shape[0], "image")
    return PatchSet(data=x[grid.indices], grid=grid)


def aggregate(grid: PatchGrid, patches: PatchSet) -> np.ndarray:
    """Σ_i R_iᵀ p_i. 평균을 내지 않는다 (호출 측에서 overlap_counts 로 나눔)"""
    if not grid.same_geometry(patches.grid):
        raise ServiceException.dimension_mismatch(
            (grid.image_height, grid.image_width, grid.patch_side, grid.stride),
            (
                patches.grid.image_height,
                patches.grid.image_width,
                patches.grid.patch_side,
                patches.grid.stride,
            ),
            "patch grid",
        )
    if patches.data.shape != grid.indices.shape:
        raise ServiceException.dimension_mismatch(grid.indices.shape, patches.data.shape, "patches")
    # bincount 는 고정 순서로 누적하므로 결과가 재현 가능
    return np.bincount(
        grid.indices.ravel(), weights=patches.data.ravel(), minlength=grid.pixel_count
    )


def average(grid: PatchGrid, patches: PatchSet) -> np.ndarray:
    """R̃⁻¹ Σ_i R_iᵀ p_i, 겹침 수로 가중한 재합성"""
    return aggregate(grid, patches) / grid.overlap_counts
