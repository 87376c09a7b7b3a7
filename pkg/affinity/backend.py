import abc
import asyncio
import functools
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Any, Callable, Optional

from .exceptions import InputError


class BaseBackend(abc.ABC):

    @abc.abstractmethod
    async def connect(self):
        pass

    @abc.abstractmethod
    async def submit(self, fn: Callable[..., Any], *args, **kwargs) -> Any:
        pass

    @abc.abstractmethod
    async def close(self):
        pass

    @property
    def executor(self) -> Optional[Executor]:
        """Executor handed to the partition sums for their subtree fan-out."""
        return None


class InlineBackend(BaseBackend):
    """Runs every job in the event-loop thread."""

    async def connect(self):
        pass

    async def submit(self, fn: Callable[..., Any], *args, **kwargs) -> Any:
        return fn(*args, **kwargs)

    async def close(self):
        pass


class PoolBackend(BaseBackend):
    """Runs jobs in a thread or process pool through ``run_in_executor``."""

    KINDS = ("thread", "process")

    def __init__(self, workers: Optional[int] = None, kind: str = "thread"):
        if kind not in self.KINDS:
            raise InputError(f"pool kind must be one of {self.KINDS}, got {kind!r}")
        self._workers = workers
        self._kind = kind
        self._pool: Optional[Executor] = None
        self._subtree_pool: Optional[Executor] = None

    async def connect(self):
        if self._kind == "thread":
            self._pool = ThreadPoolExecutor(max_workers=self._workers)
        else:
            self._pool = ProcessPoolExecutor(max_workers=self._workers)
        # jobs running inside the pool must not wait on their own pool
        self._subtree_pool = ThreadPoolExecutor(max_workers=self._workers)

    async def submit(self, fn: Callable[..., Any], *args, **kwargs) -> Any:
        if self._pool is None:
            raise RuntimeError("backend is not connected")
        loop = asyncio.get_running_loop()
        return await loop.run_in_executor(self._pool, functools.partial(fn, *args, **kwargs))

    async def close(self):
        for pool in (self._pool, self._subtree_pool):
            if pool is not None:
                pool.shutdown(wait=True)
        self._pool = self._subtree_pool = None

    @property
    def executor(self) -> Optional[Executor]:
        return self._subtree_pool if self._kind == "thread" else None
