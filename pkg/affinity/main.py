import asyncio
import dataclasses
import itertools
import logging
from typing import Any, Callable, Optional, Tuple

from .backend import BaseBackend, InlineBackend
from .config import DEFAULT_LIMITS, Limits
from .cones import pressure_bounds
from .continuity import scan_row
from .dimension import DimensionBounds, affinity_dimension_bounds, joint_spectral_radius_bounds
from .document import ScanSpec
from .measures import BernoulliAnalysis, Estimate, energy_estimate, lyapunov_mc, variational_lower
from .methods import Potential
from .pressure import LinearTuple, PressureBounds
from .selfaffine import check_falconer, iter_falconer
from .stream import RowStream


class AsyncAffinity:
    """Async front end: every computation runs as a job on the backend."""

    logger = logging.getLogger("affinity.AsyncAffinity")

    def __init__(self, backend: Optional[BaseBackend] = None, limits: Limits = DEFAULT_LIMITS):
        self._backend = backend or InlineBackend()
        self.limits = limits
        self.job_counter = itertools.count(1)
        self._streams = set()

    async def connect(self):
        await self._backend.connect()

    async def close(self):
        for task in list(self._streams):
            task.cancel()
        await self._backend.close()

    async def __aenter__(self) -> "AsyncAffinity":
        await self.connect()
        return self

    async def __aexit__(self, *exc_info):
        await self.close()

    async def pressure(
        self,
        T: LinearTuple,
        s: float,
        n: int,
        potential: str = Potential.SVF,
        cone: Any = "auto",
    ) -> PressureBounds:
        return await self._do_job(
            pressure_bounds, T, s, n, potential, cone, self._backend.executor, self.limits
        )

    async def dimension(self, T: LinearTuple, n: int, use_cone: bool = True) -> DimensionBounds:
        return await self._do_job(affinity_dimension_bounds, T, n, use_cone, self.limits)

    async def jsr(self, T: LinearTuple, n_max: int) -> Tuple[float, float]:
        return await self._do_job(joint_spectral_radius_bounds, T, n_max, limits=self.limits)

    async def lyapunov(
        self, T: LinearTuple, p, steps: int, reps: int, seed: int, s: Optional[float] = None
    ) -> BernoulliAnalysis:
        analysis = await self._do_job(lyapunov_mc, T, p, steps, reps, seed)
        if s is None:
            return analysis
        energy = energy_estimate(T, analysis.weights, s, analysis)
        return dataclasses.replace(analysis, energy=energy.value, energy_stderr=energy.stderr)

    async def variational(
        self, T: LinearTuple, p, s: float, steps: int, reps: int, seed: int
    ) -> Estimate:
        return await self._do_job(variational_lower, T, p, s, steps, reps, seed)

    async def falconer(self, T: LinearTuple, trials: int, points: int, seed: int) -> RowStream:
        check_falconer(T)
        rows = iter_falconer(T, trials, points, seed, self.limits)
        return self._do_stream("falconer", lambda: next(rows, None))

    async def scan(self, spec: ScanSpec, s: float, n: int, cone: str = "auto") -> RowStream:
        spec.check()
        grid = iter(spec.t_grid)

        def step():
            t = next(grid, None)
            return None if t is None else scan_row(spec, t, s, n, cone, self.limits)

        return self._do_stream("scan", step)

    def _do_stream(self, name: str, step: Callable[[], Any]) -> RowStream:
        queue: asyncio.Queue = asyncio.Queue()
        task = asyncio.get_running_loop().create_task(self._produce(name, step, queue))
        self._streams.add(task)
        task.add_done_callback(self._streams.discard)
        return RowStream(name, queue)

    async def _produce(self, name: str, step: Callable[[], Any], queue: asyncio.Queue):
        try:
            while True:
                row = await self._backend_step(step)
                if row is None:
                    break
                self.logger.debug(f"{name}: {row}")
                queue.put_nowait(row)
        except Exception as exc:
            queue.put_nowait(exc)
        queue.put_nowait(None)

    async def _backend_step(self, step: Callable[[], Any]) -> Any:
        # generators are not picklable, so stream steps never go to a process pool
        if self._backend.executor is None and not isinstance(self._backend, InlineBackend):
            return step()
        return await self._backend.submit(step)

    async def _do_job(self, fn: Callable[..., Any], *args, **kwargs) -> Any:
        job_id = next(self.job_counter)
        self.logger.debug(f"job {job_id}: {fn.__name__}")
        result = await self._backend.submit(fn, *args, **kwargs)
        self.logger.debug(f"job {job_id}: done")
        return result
