"""
저랭크 PLE (piecewise linear estimator)
=======================================
각 패치를 하나의 Gaussian 으로 설명하는 hard-assignment MAP-EM.

- E-step: 성분별 Wiener 추정 θ_i^k 와 MAP 기준으로 k̃_i 선택
- M-step: 같은 성분에 배정된 추정치의 ML 평균/공분산
- 저랭크화: gmm.evt_lowrank 재사용
"""
from typing import Optional, Sequence

import numpy as np
from loguru import logger

from exceptions.common import ServiceException
from models.mixture import PleModel
from models.patches import PatchSet
from services import gmm


def _check_ready(model: PleModel) -> None:
    if model.k < 1:
        raise ServiceException.invalid_argument("PLE 모델에 성분이 없습니다")
    if model.noise_variance <= 0:
        raise ServiceException.invalid_argument(f"σ² 는 양수여야 합니다 ({model.noise_variance})")
    if model.low_rank is None:
        raise ServiceException.invalid_argument("ple_estep 전에 ple_lowrank 로 Σ̃_k 를 만들어야 합니다")


def _class_estimates(model: PleModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """x: (N, P) → (θ (K, N, P), 선택 기준값 (N, K))"""
    lr = model.low_rank
    sigma2 = model.noise_variance
    thetas = np.empty((lr.k,) + x.shape)
    criteria = np.empty((x.shape[0], lr.k))
    for k in range(lr.k):
        vals, vecs = lr.eigvals[k], lr.eigvecs[k]
        evidence = vals + sigma2
        coords = (x - lr.means[k]) @ vecs
        gain = vals / evidence
        shrunk = coords * gain
        # 평균 중심화 Wiener 추정: Σ̃(Σ̃+σ²I)⁻¹(x−μ̃) + μ̃
        thetas[k] = shrunk @ vecs.T + lr.means[k]
        fidelity = np.sum((coords - shrunk) ** 2, axis=1) / sigma2
        # log|Σ̃_k| 대신 유한한 log|Σ̃_k + σ²I| 사용
        log_det = 0.5 * np.sum(np.log(evidence))
        prior = np.sum(shrunk**2 / evidence, axis=1)
        criteria[:, k] = fidelity + log_det + prior
    return thetas, criteria


def selection_criteria(model: PleModel, patches: PatchSet) -> np.ndarray:
    _check_ready(model)
    return _class_estimates(model, gmm.as_samples(patches))[1]


def ple_estep(model: PleModel, patches: PatchSet) -> tuple[PatchSet, np.ndarray]:
    """패치별 (x̃_i, k̃_i). 동점이면 가장 작은 k"""
    _check_ready(model)
    x = gmm.as_samples(patches)
    if x.shape[1] != model.dim:
        raise ServiceException.dimension_mismatch(model.dim, x.shape[1], "patch dimension")
    thetas, criteria = _class_estimates(model, x)
    assignments = np.argmin(criteria, axis=1)
    estimates = thetas[assignments, np.arange(x.shape[0])]
    return patches.with_data(np.ascontiguousarray(estimates.T)), assignments


def ple_mstep(
    estimates: PatchSet,
    assignments: np.ndarray,
    k: Optional[int] = None,
    previous: Optional[PleModel] = None,
    noise_variance: Optional[float] = None,
) -> PleModel:
    """클래스별 ML 통계 (편향 공분산 + floor). 빈 클래스는 이전 파라미터 유지"""
    x = gmm.as_samples(estimates)
    assignments = np.asarray(assignments, dtype=np.int64)
    if assignments.shape != (x.shape[0],):
        raise ServiceException.dimension_mismatch(x.shape[0], assignments.shape, "assignments")
    if k is None:
        k = previous.k if previous is not None else int(assignments.max()) + 1
    if noise_variance is None:
        noise_variance = previous.noise_variance if previous is not None else 1e-5

    dim = x.shape[1]
    if previous is not None:
        means = previous.means.copy()
        covs = previous.covariances.copy()
    else:
        means = np.repeat(x.mean(axis=0)[None], k, axis=0)
        global_cov = gmm.floored(np.cov(x, rowvar=False, bias=True).reshape(dim, dim))
        covs = np.repeat(global_cov[None], k, axis=0)

    empty = []
    for c in range(k):
        members = x[assignments == c]
        if members.shape[0] == 0:
            empty.append(c)
            continue
        mean = members.mean(axis=0)
        diff = members - mean
        means[c] = mean
        covs[c] = gmm.floored(diff.T @ diff / members.shape[0])
    if empty:
        logger.warning("PLE M-step: 빈 클래스 {} 는 이전 파라미터 유지", empty)

    return PleModel(
        means=means,
        covariances=covs,
        assignments=assignments,
        noise_variance=float(noise_variance),
    )


def ple_lowrank(model: PleModel, gamma: int | Sequence[int]) -> PleModel:
    weights = np.full(model.k, 1.0 / model.k)
    full = gmm.build_model(weights, model.means, model.covariances)
    return PleModel(
        means=model.means,
        covariances=model.covariances,
        assignments=model.assignments,
        noise_variance=model.noise_variance,
        low_rank=gmm.evt_lowrank(full, gamma, model.noise_variance),
    )


def initial_assignments(patches: PatchSet, k: int, seed: int) -> np.ndarray:
    """EM 1회 학습 후 책임도의 hard argmax"""
    model = gmm.em_fit(patches, k, seed=seed, max_em_iters=1)
    return np.argmax(gmm.responsibilities(model, patches), axis=1)
