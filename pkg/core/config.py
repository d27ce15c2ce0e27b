from pathlib import Path
from typing import Any, Mapping, Optional

from pydantic import ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from exceptions.common import ServiceException
from schemas.config import ReconstructionConfig


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_file=".env", env_ignore_empty=True, extra="ignore")

    APP_NAME: str = "lrgmm-cs"
    APP_VERSION: str = "0.1.0"
    ENVIRONMENT: str = "local"  # local | staging | production

    LOG_LEVEL: str = "INFO"
    CS_GMM_THREADS: int = 1
    CS_GMM_IMAGE_DIR: Optional[str] = None

    @property
    def is_local(self) -> bool:
        return self.ENVIRONMENT == "local"

    @property
    def worker_count(self) -> int:
        return max(1, self.CS_GMM_THREADS)


settings = Settings()


def parse_config_text(text: str) -> dict[str, str]:
    """key=value 평문 설정을 dict 로 변환. '#' 주석과 빈 줄은 무시"""
    values: dict[str, str] = {}
    valid = set(ReconstructionConfig.valid_keys())
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ServiceException.invalid_argument(
                f"설정 {lineno}번째 줄이 key=value 형식이 아닙니다: {raw!r}"
            )
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in valid:
            raise ServiceException.unknown_config_key(key, valid)
        values[key] = value
    return values


def load_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    if not path.is_file():
        raise ServiceException.not_found(f"설정 파일을 찾을 수 없습니다: {path}")
    return parse_config_text(path.read_text(encoding="utf-8"))


def build_config(*layers: Mapping[str, Any]) -> ReconstructionConfig:
    """뒤쪽 레이어가 앞쪽을 덮어쓴다 (defaults < file < --set < 플래그)"""
    valid = set(ReconstructionConfig.valid_keys())
    merged: dict[str, Any] = {}
    for layer in layers:
        for key, value in layer.items():
            if value is None:
                continue
            if key not in valid:
                raise ServiceException.unknown_config_key(key, valid)
            merged[key] = value
    try:
        return ReconstructionConfig.model_validate(merged)
    except ValidationError as exc:
        errors = "; ".join(
            f"{'.'.join(str(loc) for loc in err['loc']) or 'config'}: {err['msg']}"
            for err in exc.errors()
        )
        raise ServiceException.invalid_argument(f"설정값 검증 실패: {errors}") from exc
