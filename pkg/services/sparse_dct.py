"""직교 2-D DCT 패치 기저 B 와 ADMM-SLOPE 의 z-step"""
from functools import lru_cache

import numpy as np
from scipy.fft import dct

from exceptions.common import ServiceException
from models.basis import PatchBasis
from models.patches import PatchSet


@lru_cache(maxsize=8)
def build_basis(patch_side: int) -> PatchBasis:
    """분리형 직교 DCT-II. 패치 벡터화가 row-major 이므로 Bᵀ = C ⊗ C"""
    if patch_side < 1:
        raise ServiceException.invalid_argument(f"patch_side 는 1 이상이어야 합니다 ({patch_side})")
    c = dct(np.eye(patch_side), norm="ortho", axis=0)
    basis = np.kron(c, c).T
    basis.flags.writeable = False
    return PatchBasis(dimension=patch_side * patch_side, basis=basis)


def analyze(basis: PatchBasis, patch: np.ndarray) -> np.ndarray:
    """Bᵀ·patch. (P,) 또는 (P, N_p) 입력"""
    patch = np.asarray(patch, dtype=np.float64)
    if patch.shape[0] != basis.dimension:
        raise ServiceException.dimension_mismatch(basis.dimension, patch.shape[0], "patch")
    return basis.basis.T @ patch


def synthesize(basis: PatchBasis, coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[0] != basis.dimension:
        raise ServiceException.dimension_mismatch(basis.dimension, coeffs.shape[0], "coefficients")
    return basis.basis @ coeffs


def soft_threshold(z: np.ndarray, threshold: float) -> np.ndarray:
    if threshold < 0:
        raise ServiceException.invalid_argument(f"threshold 는 음수일 수 없습니다 ({threshold})")
    z = np.asarray(z, dtype=np.float64)
    return np.sign(z) * np.maximum(np.abs(z) - threshold, 0.0)


def z_step_threshold(lam: float, eta: float) -> float:
    # λ‖z‖₁ + η‖r − Bz‖² 의 정류 조건에서 유도
    return lam / (2.0 * eta)


def solve_z_step(basis: PatchBasis, patches: PatchSet, lam: float, eta: float) -> PatchSet:
    """z_i = S_{λ/2η}(Bᵀ R_i w). patches 는 R_i w 의 모음"""
    if eta <= 0:
        raise ServiceException.invalid_argument(f"eta 는 양수여야 합니다 ({eta})")
    if lam < 0:
        raise ServiceException.invalid_argument(f"lambda 는 음수일 수 없습니다 ({lam})")
    coeffs = soft_threshold(analyze(basis, patches.data), z_step_threshold(lam, eta))
    return patches.with_data(coeffs)


def z_objective(basis: PatchBasis, patches: PatchSet, coeffs: PatchSet, lam: float, eta: float) -> float:
    """λ‖z‖₁ + η Σ_i ‖R_i w − B z_i‖²"""
    residual = patches.data - synthesize(basis, coeffs.data)
    return float(lam * np.abs(coeffs.data).sum() + eta * np.sum(residual**2))
