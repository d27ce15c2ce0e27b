import time


class Stopwatch:
    """perf_counter 기반 경과 시간. enabled=False 이면 항상 0 을 돌려준다"""

    def __init__(self, enabled: bool = True):
        self.enabled = enabled
        self._started = time.perf_counter()

    def restart(self) -> None:
        self._started = time.perf_counter()

    def elapsed(self) -> float:
        if not self.enabled:
            return 0.0
        return time.perf_counter() - self._started
