from dataclasses import dataclass, field
from typing import Any, Optional

from models.image import ImageBuffer
from schemas.results import TraceRecord


@dataclass(eq=False)
class ReconstructionResult:
    image: ImageBuffer  # [0,1] 로 clamp 된 출력
    iterations_run: int
    trace: list[TraceRecord] = field(default_factory=list)
    models: list[Any] = field(default_factory=list)  # 채널별 최종 모델 (LowRankGmm | PleModel | None)
    warm_start_psnr_db: Optional[float] = None
    objective_trace: list[float] = field(default_factory=list)
    # 반복별 사영 직후 ‖target − A x‖ (채널 합산). ist/admm 은 None
    projection_residuals: list[Optional[float]] = field(default_factory=list)
