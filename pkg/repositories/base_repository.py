import os
import tempfile
from pathlib import Path
from typing import Generic, TypeVar

from loguru import logger

from exceptions.common import ServiceException

T = TypeVar("T")


class BaseRepository(Generic[T]):
    """파일 하나에 객체 하나를 저장하는 저장소. 하위 클래스는 _read/_write 만 구현한다"""

    kind: str = "file"

    def get(self, path: str | Path) -> T:
        path = Path(path)
        if not path.is_file():
            raise ServiceException.not_found(f"{self.kind} 파일을 찾을 수 없습니다: {path}")
        try:
            obj = self._read(path)
        except OSError as exc:
            raise ServiceException.io_error(f"{self.kind} 파일을 읽을 수 없습니다: {path} ({exc})") from exc
        logger.debug("{} 로드: {}", self.kind, path)
        return obj

    def save(self, obj: T, path: str | Path) -> Path:
        """임시 파일에 쓴 뒤 rename. 실패하면 대상 경로에 아무것도 남지 않는다"""
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
            tmp = Path(tmp_name)
            try:
                with os.fdopen(fd, "wb") as handle:
                    handle.write(self._write(obj))
                os.replace(tmp, path)
            finally:
                tmp.unlink(missing_ok=True)
        except OSError as exc:
            raise ServiceException.io_error(f"{self.kind} 파일을 쓸 수 없습니다: {path} ({exc})") from exc
        logger.debug("{} 저장: {}", self.kind, path)
        return path

    def _read(self, path: Path) -> T:
        raise NotImplementedError

    def _write(self, obj: T) -> bytes:
        raise NotImplementedError
