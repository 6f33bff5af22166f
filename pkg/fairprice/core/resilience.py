import functools
import logging
import threading
from typing import Callable, Optional, Sequence

import numpy as np

from fairprice.core.errors import CircuitOpenError

logger = logging.getLogger(__name__)

FAILURE_THRESHOLD = 25


class CircuitBreaker:
    """
    Guards a black-box objective function.

    Non-finite results and raised exceptions are converted into an all-+inf
    vector. Positions listed in `inf_allowed` may legitimately hold +inf and do
    not count as failures there. With a `failure_threshold` the circuit opens
    after that many consecutive failures and every further call raises
    CircuitOpenError; with None it never opens.
    """

    def __init__(
        self,
        n_objectives: int,
        failure_threshold: Optional[int] = FAILURE_THRESHOLD,
        inf_allowed: Sequence[int] = (),
    ):
        self.n_objectives = n_objectives
        self.failure_threshold = failure_threshold
        self.inf_ok = np.zeros(n_objectives, dtype=bool)
        self.inf_ok[list(inf_allowed)] = True
        self.failure_count = 0
        self.total_failures = 0
        self.is_open = False
        self._lock = threading.Lock()

    def penalty(self) -> np.ndarray:
        return np.full(self.n_objectives, np.inf)

    def acceptable(self, result: np.ndarray) -> bool:
        if result.shape != (self.n_objectives,):
            return False
        finite = np.isfinite(result)
        return bool(np.all(finite | (self.inf_ok & np.isposinf(result))))

    def _record(self, failed: bool) -> None:
        with self._lock:
            if not failed:
                self.failure_count = 0
                return
            self.failure_count += 1
            self.total_failures += 1
            if self.failure_threshold is not None and self.failure_count >= self.failure_threshold:
                if not self.is_open:
                    logger.error("Circuit breaker opened after %d consecutive failures.", self.failure_count)
                self.is_open = True

    def call(self, func: Callable[..., np.ndarray], *args, **kwargs) -> np.ndarray:
        if self.is_open:
            raise CircuitOpenError(
                f"objective failed {self.failure_count} times in a row; aborting the run"
            )
        try:
            result = np.asarray(func(*args, **kwargs), dtype=float).ravel()
        except CircuitOpenError:
            raise
        except Exception as e:
            logger.warning("Objective evaluation raised %s: %s", type(e).__name__, e)
            self._record(failed=True)
            return self.penalty()
        if not self.acceptable(result):
            self._record(failed=True)
            return self.penalty()
        self._record(failed=False)
        return result

    def wrap(self, func: Callable[..., np.ndarray]) -> Callable[..., np.ndarray]:
        @functools.wraps(func)
        def wrapper(*args, **kwargs) -> np.ndarray:
            return self.call(func, *args, **kwargs)
        return wrapper
