import hashlib
import json
from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, model_validator

from schemas.common import Algorithm, Projection, WarmStart

DEFAULT_K = {Algorithm.LR_GMM_SLOPE: 6, Algorithm.LR_PLE_SLOPE: 20, Algorithm.ADMM_SLOPE: 6}
DEFAULT_MAX_ITERS = {WarmStart.ADJOINT: 20, WarmStart.ZERO: 50}
# 비워 두면 algorithm, warm_start, patch_side 로부터 결정되는 필드
DERIVED_FIELDS = ("K", "max_iters", "projection", "gamma")


def default_projection(algorithm: Algorithm) -> Projection:
    return Projection.ADMM if algorithm == Algorithm.ADMM_SLOPE else Projection.ACC_GAP


class ReconstructionConfig(BaseModel):
    """재구성 하이퍼파라미터. 필드명(별칭 포함)이 설정 파일 키와 CLI 플래그 이름이 된다."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")

    algorithm: Algorithm = Algorithm.LR_GMM_SLOPE
    projection: Optional[Projection] = None
    max_iters: Optional[int] = Field(default=None, ge=0)
    K: Optional[int] = Field(default=None, ge=1)
    gamma: Optional[int] = Field(default=None, ge=1)
    sigma2: float = Field(default=1e-5, gt=0)
    beta: float = Field(default=0.5, gt=0)
    eta: float = Field(default=1.0, gt=0)
    lambda_: float = Field(default=0.05, ge=0, alias="lambda")
    zeta: float = Field(default=1.0, gt=0)
    patch_side: int = Field(default=8, ge=1)
    stride: int = Field(default=4, ge=1)
    em_iters_per_outer: int = Field(default=5, ge=1)
    em_tol: float = Field(default=1e-5, ge=0)
    seed: int = Field(default=0, ge=0)
    warm_start: WarmStart = WarmStart.ADJOINT

    _supplied: frozenset[str] = PrivateAttr(default_factory=frozenset)

    def model_post_init(self, __context: Any) -> None:
        # after 검증기가 파생 기본값을 채우기 전의 명시 필드
        self._supplied = frozenset(self.model_fields_set)

    @model_validator(mode="after")
    def _resolve_defaults(self) -> "ReconstructionConfig":
        if self.projection is None:
            self.projection = default_projection(self.algorithm)
        if self.algorithm == Algorithm.ADMM_SLOPE and self.projection != Projection.ADMM:
            raise ValueError("admm-slope 알고리즘은 projection=admm 만 지원합니다")
        if self.K is None:
            self.K = DEFAULT_K[self.algorithm]
        if self.max_iters is None:
            self.max_iters = DEFAULT_MAX_ITERS[self.warm_start]
        dim = self.patch_side * self.patch_side
        if self.gamma is None:
            self.gamma = max(1, dim // 2)
        if dim > 1 and not 1 <= self.gamma < dim:
            raise ValueError(f"gamma 는 1 이상 {dim} 미만이어야 합니다 (gamma={self.gamma})")
        return self

    @property
    def patch_dim(self) -> int:
        return self.patch_side * self.patch_side

    @classmethod
    def valid_keys(cls) -> list[str]:
        return [field.alias or name for name, field in cls.model_fields.items()]

    def derived_fields(self) -> set[str]:
        """지정되지 않아 다른 필드로부터 결정된 필드 (K, max_iters, projection, gamma 중)"""
        return {name for name in DERIVED_FIELDS if name not in self._supplied}

    def base_layer(self) -> dict:
        """파생 기본값을 뺀 설정 레이어. 다른 값을 덮어쓴 뒤 다시 검증하는 데 쓴다"""
        return self.model_dump(mode="json", by_alias=True, exclude=self.derived_fields())

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]

    def echo(self) -> str:
        return " ".join(
            f"{key}={value}"
            for key, value in self.model_dump(mode="json", by_alias=True).items()
        )
