import os
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar
from dotenv import load_dotenv

load_dotenv()

TOOL_NAME = "celliptic"
TOOL_VERSION = "0.1.0"

# Worker cap for restarts, query points and ladder rungs
THREADS = max(1, int(os.getenv("CELLIPTIC_THREADS", os.cpu_count() or 1)))

# Uploaded grids and CLI reports live here unless overridden
DATA_DIR = os.getenv(
    "CELLIPTIC_DATA_DIR",
    os.path.join(os.path.dirname(__file__), "..", "data")
)

LOG_LEVEL = os.getenv("CELLIPTIC_LOG_LEVEL", "INFO").upper()
MAX_UPLOAD_SIZE = int(os.getenv("CELLIPTIC_MAX_UPLOAD_MB", "256")) * 1024 * 1024

T = TypeVar("T")
R = TypeVar("R")


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Configure the root logger once for the CLI and the service"""
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def parallel_map(fn: Callable[[T], R], items: Iterable[T], max_workers: int = None) -> List[R]:
    """Map fn over items on a thread pool; results keep the input order"""
    items = list(items)
    workers = min(max_workers or THREADS, max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
