"""
패치 GMM: EM 학습, 고유값 임계(EVT) 저랭크화, 사후 평균 패치 갱신
=================================================================
모든 Gaussian 밀도는 대칭 고유분해 기반 log-space 로 계산한다.
(E + Σ̃_k) 의 고유값은 λ̃ + σ² 이므로 Cholesky 없이 바로 쓸 수 있다.
"""
from typing import Sequence

import numpy as np
from loguru import logger
from scipy.special import logsumexp

from exceptions.common import ServiceException
from models.mixture import GmmModel, LowRankGmm
from models.patches import PatchSet

COVARIANCE_FLOOR_RATIO = 1e-6
COVARIANCE_FLOOR_MIN = 1e-10
EMPTY_COMPONENT_MASS = 1e-10
LOG_2PI = np.log(2.0 * np.pi)


def covariance_floor(cov: np.ndarray) -> float:
    """ε = max(1e-6 · trace(Σ)/P, 1e-10)"""
    dim = cov.shape[0]
    return max(COVARIANCE_FLOOR_RATIO * float(np.trace(cov)) / dim, COVARIANCE_FLOOR_MIN)


def floored(cov: np.ndarray) -> np.ndarray:
    cov = 0.5 * (cov + cov.T)
    return cov + covariance_floor(cov) * np.eye(cov.shape[0])


def as_samples(patches: PatchSet | np.ndarray) -> np.ndarray:
    """(P, N_p) 패치 행렬 → (N_p, P) 샘플 행렬"""
    data = patches.data if isinstance(patches, PatchSet) else np.asarray(patches, dtype=np.float64)
    if data.ndim != 2:
        raise ServiceException.dimension_mismatch("(P, N_p)", data.shape, "patches")
    if not np.all(np.isfinite(data)):
        raise ServiceException.non_finite("patches")
    return data.T


def eig_descending(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(0.5 * (cov + cov.T))
    return np.maximum(vals[::-1], 0.0), vecs[:, ::-1]


def build_model(weights: np.ndarray, means: np.ndarray, covariances: np.ndarray) -> GmmModel:
    eig = [eig_descending(cov) for cov in covariances]
    return GmmModel(
        weights=np.asarray(weights, dtype=np.float64),
        means=np.asarray(means, dtype=np.float64),
        covariances=np.asarray(covariances, dtype=np.float64),
        eigvals=np.stack([vals for vals, _ in eig]),
        eigvecs=np.stack([vecs for _, vecs in eig]),
    )


# ── 로그 밀도 ──

def _log_gaussian(x: np.ndarray, mean: np.ndarray, eigvals: np.ndarray, eigvecs: np.ndarray):
    """log N(x; μ, U diag(λ) Uᵀ), x 는 (N, P). 고유좌표도 함께 반환"""
    coords = (x - mean) @ eigvecs
    dim = mean.shape[0]
    logdens = -0.5 * (dim * LOG_2PI + np.sum(np.log(eigvals)) + np.sum(coords**2 / eigvals, axis=1))
    return logdens, coords


def _log_weighted_densities(model: GmmModel, x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_weights = np.log(model.weights)
    columns = []
    for k in range(model.k):
        vals = np.maximum(model.eigvals[k], COVARIANCE_FLOOR_MIN)
        logdens, _ = _log_gaussian(x, model.means[k], vals, model.eigvecs[k])
        columns.append(logdens + log_weights[k])
    return np.stack(columns, axis=1)


def _e_step(model: GmmModel, x: np.ndarray) -> tuple[np.ndarray, float]:
    weighted = _log_weighted_densities(model, x)
    log_norm = logsumexp(weighted, axis=1, keepdims=True)
    return weighted - log_norm, float(np.mean(log_norm))


def responsibilities(model: GmmModel, patches: PatchSet | np.ndarray) -> np.ndarray:
    """(N_p, K) 사후 성분 확률"""
    log_resp, _ = _e_step(model, as_samples(patches))
    return np.exp(log_resp)


def log_likelihood(model: GmmModel, patches: PatchSet | np.ndarray) -> float:
    """패치당 평균 log-likelihood"""
    return _e_step(model, as_samples(patches))[1]


# ── EM ──

def _m_step(
    x: np.ndarray,
    resp: np.ndarray,
    fallback_means: np.ndarray,
    fallback_covs: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """가중 평균/공분산. 질량이 없는 성분은 fallback 파라미터 유지"""
    n = x.shape[0]
    nk = resp.sum(axis=0)
    means = np.array(fallback_means, dtype=np.float64, copy=True)
    covs = np.array(fallback_covs, dtype=np.float64, copy=True)
    for k in np.flatnonzero(nk > EMPTY_COMPONENT_MASS * n):
        r = resp[:, k]
        mean = (r @ x) / nk[k]
        diff = x - mean
        cov = (diff.T * r) @ diff / nk[k]
        means[k] = mean
        covs[k] = floored(cov)
    return means, covs, nk


def _kmeans_pp_centers(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    weights = np.ones(n)
    closest = None
    centers = np.empty((k, x.shape[1]))
    for j in range(k):
        total = weights.sum()
        if total <= 0:
            weights, total = np.ones(n), float(n)
        # 누적합 역변환 샘플링: 같은 패치를 반복한 데이터셋에서도 같은 점이 뽑힌다
        idx = int(np.searchsorted(np.cumsum(weights), rng.random() * total, side="right"))
        centers[j] = x[min(idx, n - 1)]
        d2 = np.sum((x - centers[j]) ** 2, axis=1)
        closest = d2 if closest is None else np.minimum(closest, d2)
        weights = closest
    return centers


def _nearest(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    d2 = (
        np.sum(x**2, axis=1)[:, None]
        - 2.0 * x @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    )
    return np.argmin(d2, axis=1)


def _initialize(x: np.ndarray, k: int, seed: int) -> GmmModel:
    """k-means++ 시딩 → Lloyd 1회 → hard assignment 로 초기 파라미터"""
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp_centers(x, k, rng)
    labels = _nearest(x, centers)
    for j in range(k):
        members = labels == j
        if np.any(members):
            centers[j] = x[members].mean(axis=0)
    labels = _nearest(x, centers)

    resp = np.zeros((x.shape[0], k))
    resp[np.arange(x.shape[0]), labels] = 1.0
    global_cov = floored(np.cov(x, rowvar=False, bias=True).reshape(x.shape[1], x.shape[1]))
    means, covs, nk = _m_step(x, resp, centers, np.repeat(global_cov[None], k, axis=0))
    counts = np.maximum(nk, 1.0)
    return build_model(counts / counts.sum(), means, covs)


def em_fit_with_trace(
    patches: PatchSet | np.ndarray,
    k: int,
    seed: int = 0,
    max_em_iters: int = 100,
    tol: float = 1e-6,
    init: GmmModel | None = None,
) -> tuple[GmmModel, list[float]]:
    """EM 학습. 수용된 각 반복의 평균 log-likelihood 추이를 함께 반환"""
    x = as_samples(patches)
    if k < 1:
        raise ServiceException.invalid_argument(f"성분 수 K 는 1 이상이어야 합니다 (K={k})")
    if x.shape[0] < k:
        raise ServiceException.invalid_argument(
            f"패치 수({x.shape[0]})가 성분 수({k})보다 적습니다"
        )
    if init is not None and (init.k != k or init.dim != x.shape[1]):
        raise ServiceException.dimension_mismatch((k, x.shape[1]), (init.k, init.dim), "init model")

    model = _initialize(x, k, seed) if init is None else init
    log_resp, ll = _e_step(model, x)
    trace: list[float] = []

    for it in range(max_em_iters):
        means, covs, nk = _m_step(x, np.exp(log_resp), model.means, model.covariances)
        candidate = build_model(nk / nk.sum(), means, covs)
        cand_log_resp, cand_ll = _e_step(candidate, x)
        if trace and cand_ll < trace[-1]:
            logger.warning("EM {}회차: log-likelihood 감소 ({:.6e} → {:.6e}), 이전 모델 유지", it, trace[-1], cand_ll)
            break
        gain = cand_ll - trace[-1] if trace else np.inf
        model, log_resp = candidate, cand_log_resp
        trace.append(cand_ll)
        if gain < tol:
            break

    if not trace:
        trace.append(ll)
    logger.debug("EM 종료: K={} 반복={} log-likelihood={:.6f}", k, len(trace), trace[-1])
    return model, trace


def em_fit(
    patches: PatchSet | np.ndarray,
    k: int,
    seed: int = 0,
    max_em_iters: int = 100,
    tol: float = 1e-6,
    init: GmmModel | None = None,
) -> GmmModel:
    return em_fit_with_trace(patches, k, seed, max_em_iters, tol, init)[0]


# ── 저랭크화 ──

def threshold_eigenvalues(eigvals: np.ndarray, gamma: int) -> np.ndarray:
    """λ̃_i = max(λ_i − λ_{γ+1}, 0). eigvals 는 내림차순"""
    shrunk = np.maximum(eigvals - eigvals[gamma], 0.0)
    shrunk[gamma:] = 0.0
    return shrunk


def evt_lowrank(
    model: GmmModel,
    gamma: int | Sequence[int],
    noise_variance: float = 1e-5,
) -> LowRankGmm:
    """각 성분 공분산에 EVT 적용. τ_k = λ_{γ_k+1} 인 nuclear-norm prox 와 동일"""
    dim = model.dim
    ranks = np.broadcast_to(np.asarray(gamma, dtype=np.int64), (model.k,)).copy()
    if np.any(ranks < 1) or np.any(ranks >= dim):
        raise ServiceException.invalid_argument(f"gamma 는 1 이상 {dim} 미만이어야 합니다 ({gamma})")
    if noise_variance <= 0:
        raise ServiceException.invalid_argument(f"σ² 는 양수여야 합니다 ({noise_variance})")

    eigvals = np.stack(
        [threshold_eigenvalues(model.eigvals[k], int(ranks[k])) for k in range(model.k)]
    )
    covariances = np.einsum("kij,kj,klj->kil", model.eigvecs, eigvals, model.eigvecs)
    return LowRankGmm(
        weights=model.weights.copy(),
        means=model.means.copy(),
        covariances=covariances,
        eigvals=eigvals,
        eigvecs=model.eigvecs.copy(),
        ranks=ranks,
        noise_variance=float(noise_variance),
    )


# ── 사후 평균 갱신 ──

def _check_noise(lr: LowRankGmm) -> None:
    if lr.noise_variance <= 0:
        raise ServiceException.invalid_argument(f"σ² 는 양수여야 합니다 ({lr.noise_variance})")


def _posterior_batch(lr: LowRankGmm, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """x: (N, P) → (E[x̃] (N, P), φ (N, K))"""
    _check_noise(lr)
    with np.errstate(divide="ignore"):
        log_weights = np.log(lr.weights)
    log_phi = np.empty((x.shape[0], lr.k))
    nus = np.empty((lr.k,) + x.shape)
    for k in range(lr.k):
        evidence = lr.eigvals[k] + lr.noise_variance
        logdens, coords = _log_gaussian(x, lr.means[k], evidence, lr.eigvecs[k])
        log_phi[:, k] = logdens + log_weights[k]
        gain = lr.eigvals[k] / evidence
        nus[k] = (coords * gain) @ lr.eigvecs[k].T + lr.means[k]
    log_phi -= logsumexp(log_phi, axis=1, keepdims=True)
    phi = np.exp(log_phi)
    return np.einsum("nk,knp->np", phi, nus), phi


def posterior_components(lr: LowRankGmm, x_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """단일 패치에 대한 (φ (K,), ν (K, P), Ω (K, P, P))"""
    _check_noise(lr)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.shape != (lr.dim,):
        raise ServiceException.dimension_mismatch(lr.dim, x_hat.shape, "patch")
    _, phi = _posterior_batch(lr, x_hat[None, :])
    nus = np.empty((lr.k, lr.dim))
    omegas = np.empty((lr.k, lr.dim, lr.dim))
    for k in range(lr.k):
        vals, vecs = lr.eigvals[k], lr.eigvecs[k]
        evidence = vals + lr.noise_variance
        nus[k] = vecs @ ((vecs.T @ (x_hat - lr.means[k])) * vals / evidence) + lr.means[k]
        # Σ̃ − Σ̃(E+Σ̃)⁻¹Σ̃ = U diag(λ̃σ²/(λ̃+σ²)) Uᵀ
        omegas[k] = (vecs * (vals * lr.noise_variance / evidence)) @ vecs.T
    return phi[0], nus, omegas


def posterior_update(lr: LowRankGmm, x_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.shape != (lr.dim,):
        raise ServiceException.dimension_mismatch(lr.dim, x_hat.shape, "patch")
    updated, phi = _posterior_batch(lr, x_hat[None, :])
    return updated[0], phi[0]


def update_all_patches(lr: LowRankGmm, estimates: PatchSet) -> PatchSet:
    if estimates.data.shape[0] != lr.dim:
        raise ServiceException.dimension_mismatch(lr.dim, estimates.data.shape[0], "patch dimension")
    updated, _ = _posterior_batch(lr, as_samples(estimates))
    return estimates.with_data(np.ascontiguousarray(updated.T))
