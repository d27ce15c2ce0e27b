from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class GaussianComponent:
    weight: float
    mean: np.ndarray
    covariance: np.ndarray
    eigvecs: np.ndarray
    eigvals: np.ndarray  # 내림차순


@dataclass(frozen=True, eq=False)
class GmmModel:
    """K 개 성분의 패치 GMM. 고유값은 성분별 내림차순 정렬"""

    weights: np.ndarray  # (K,)
    means: np.ndarray  # (K, P)
    covariances: np.ndarray  # (K, P, P)
    eigvals: np.ndarray  # (K, P)
    eigvecs: np.ndarray  # (K, P, P), 열이 고유벡터

    @property
    def k(self) -> int:
        return int(self.weights.shape[0])

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def component(self, k: int) -> GaussianComponent:
        return GaussianComponent(
            weight=float(self.weights[k]),
            mean=self.means[k],
            covariance=self.covariances[k],
            eigvecs=self.eigvecs[k],
            eigvals=self.eigvals[k],
        )


@dataclass(frozen=True, eq=False)
class LowRankGmm(GmmModel):
    """EVT 로 얻은 저랭크 GMM. covariances/eigvals 는 Σ̃_k, Λ̃_k"""

    ranks: np.ndarray = None  # (K,) γ_k
    noise_variance: float = 1e-5

    @property
    def effective_ranks(self) -> np.ndarray:
        return np.count_nonzero(self.eigvals > 0, axis=1)


@dataclass(frozen=True, eq=False)
class PleModel:
    means: np.ndarray  # (K, P)
    covariances: np.ndarray  # (K, P, P)
    assignments: np.ndarray  # (N_p,) k̃_i
    noise_variance: float
    low_rank: Optional[LowRankGmm] = None

    @property
    def k(self) -> int:
        return int(self.means.shape[0])

    @property
    def dim(self) -> int:
        return int(self.means.shape[1])

    def class_sizes(self) -> np.ndarray:
        return np.bincount(self.assignments, minlength=self.k)
