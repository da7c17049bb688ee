"""Thread-pool map shared by the theta and gamma sweeps."""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def map_points(func: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """Order-preserving map, threaded when workers > 1."""
    items = list(items)
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, items))
    return [func(item) for item in items]
