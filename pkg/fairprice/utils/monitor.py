"""
Worker-pool sizing from live system readings.
"""
import logging
from typing import Dict, Optional

import psutil

from fairprice.config import settings

logger = logging.getLogger(__name__)

# Set by the CLI --threads flag; caps every pool in the process.
_thread_cap: Optional[int] = None


def set_thread_cap(threads: Optional[int]) -> None:
    global _thread_cap
    if threads is not None and threads < 1:
        raise ValueError("--threads must be at least 1")
    _thread_cap = threads


def get_current_stats() -> Dict[str, float]:
    mem = psutil.virtual_memory()
    return {
        "memory_used_fraction": mem.percent / 100.0,
        "memory_available_gb": mem.available / (1024 ** 3),
        "core_count": float(psutil.cpu_count(logical=True) or 1),
    }


def get_optimal_workers(task_count: Optional[int] = None) -> int:
    """
    Worker count for a ThreadPoolExecutor.

    Starts from logical cores minus one, halves under memory pressure, and is
    capped by settings.pipeline_workers, the --threads override and the number
    of tasks to run.
    """
    stats = get_current_stats()
    base_count = max(1, int(stats["core_count"]) - 1)
    if stats["memory_used_fraction"] > 0.8:
        base_count = max(1, base_count // 2)

    base_count = min(base_count, settings.pipeline_workers)
    if _thread_cap is not None:
        base_count = min(base_count, _thread_cap)
    if task_count is not None:
        base_count = min(base_count, max(1, task_count))
    return base_count


def log_summary() -> None:
    stats = get_current_stats()
    logger.info(
        "memory %.1f%% used, %.1fGB available, %d cores, %d workers",
        stats["memory_used_fraction"] * 100,
        stats["memory_available_gb"],
        int(stats["core_count"]),
        get_optimal_workers(),
    )
