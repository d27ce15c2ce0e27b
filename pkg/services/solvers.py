"""측정 사영 단계: IST, GAP, 가속 GAP, ADMM 의 x/w/v 갱신. 연산자는 A Aᵀ = I 를 가정 (패딩 영상은 sensing.full_order)"""
from dataclasses import replace

import numpy as np

from exceptions.common import ServiceException
from models.patches import PatchGrid, PatchSet
from models.sensing import SensingOperator
from models.solver_state import SolverState
from services import patches as patch_ops
from services import sensing


def residual(op: SensingOperator, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    return y - sensing.apply(op, x)


def ist_step(op: SensingOperator, y: np.ndarray, x: np.ndarray, zeta: float = 1.0) -> np.ndarray:
    """x + (1/ζ) Aᵀ(y − A x). ζ 는 AᵀA 의 최대 고유값(=1) 이상"""
    if zeta <= 0:
        raise ServiceException.invalid_argument(f"zeta 는 양수여야 합니다 ({zeta})")
    return x + sensing.adjoint(op, residual(op, y, x)) / zeta


def gap_step(op: SensingOperator, y: np.ndarray, x: np.ndarray) -> np.ndarray:
    """{x : Ax = y} 로의 유클리드 사영. 행이 직교 정규이므로 (AAᵀ)⁻¹ = I"""
    return x + sensing.adjoint(op, residual(op, y, x))


def acc_gap_step(op: SensingOperator, y: np.ndarray, state: SolverState) -> SolverState:
    """y^t = y^{t−1} + (y − A x^t),  x^{t+1} = x^t + Aᵀ(y^t − A x^t)"""
    y_prev = y if state.y_running is None else state.y_running
    ax = sensing.apply(op, state.x)
    y_running = y_prev + (y - ax)
    x_next = state.x + sensing.adjoint(op, y_running - ax)
    return replace(state, x=x_next, y_running=y_running)


def admm_x_step(
    op: SensingOperator,
    y: np.ndarray,
    w: np.ndarray,
    v: np.ndarray,
    beta: float,
) -> np.ndarray:
    """(AᵀA + βI)⁻¹(Aᵀy + β(w − v)) 의 A Aᵀ = I 닫힌 형태"""
    if beta <= 0:
        raise ServiceException.invalid_argument(f"beta 는 양수여야 합니다 ({beta})")
    u = w - v
    return u + sensing.adjoint(op, residual(op, y, u)) / (beta + 1.0)


def admm_w_step(
    grid: PatchGrid,
    x: np.ndarray,
    v: np.ndarray,
    target_patches: PatchSet,
    beta: float,
    eta: float,
) -> np.ndarray:
    """w_n = [β(x+v) + η Σ R_iᵀ t_i]_n / (η r_n + β), 원소별 계산"""
    if beta < 0 or eta < 0 or (beta == 0 and eta == 0):
        raise ServiceException.invalid_argument(
            f"beta, eta 는 음수가 아니고 동시에 0 일 수 없습니다 (beta={beta}, eta={eta})"
        )
    numerator = beta * (x + v) + eta * patch_ops.aggregate(grid, target_patches)
    return numerator / (eta * grid.overlap_counts + beta)


def admm_v_step(v: np.ndarray, x: np.ndarray, w: np.ndarray) -> np.ndarray:
    return v + (x - w)
