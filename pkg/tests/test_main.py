import math

import numpy as np
import pytest

from affinity import AsyncAffinity, LinearTuple
from affinity.backend import InlineBackend, PoolBackend
from affinity.document import IFSDocument, ScanSpec, rotation_generators
from affinity.exceptions import InputError
from affinity.methods import Method, Splitting

DIAGONAL = LinearTuple.of([np.diag([1 / 2, 1 / 3]), np.diag([1 / 4, 1 / 5])])
DIAGONAL_P = math.log(0.5 * (1 / 3) ** 0.5 + 0.25 * (1 / 5) ** 0.5)
SMALL = LinearTuple.of([np.diag([0.4, 0.3]), np.array([[0.3, 0.1], [0.0, 0.4]])])


def scan_spec(t_grid):
    base = IFSDocument.parse({"d": 2, "maps": [{"A": A.tolist()} for A in DIAGONAL.stack]})
    return ScanSpec(base=base, directions=np.array(rotation_generators(2)) * 0.1, t_grid=t_grid)


def test_smoke():
    assert AsyncAffinity().limits.leaf_cap == 2 ** 24


@pytest.mark.asyncio
async def test_inline_jobs():
    async with AsyncAffinity() as client:
        bounds = await client.pressure(DIAGONAL, 1.5, 8)
        assert bounds.upper == pytest.approx(DIAGONAL_P, abs=1e-10)
        assert bounds.method == Method.CONE_CERTIFIED
        lo, hi = await client.jsr(DIAGONAL, 3)
        assert hi == pytest.approx(0.5, rel=1e-14)
        dimension = await client.dimension(DIAGONAL, 6)
        assert dimension.lower <= dimension.upper


@pytest.mark.asyncio
async def test_thread_pool_matches_inline():
    async with AsyncAffinity() as inline:
        expected = await inline.pressure(DIAGONAL, 1.2, 9, cone="off")
    async with AsyncAffinity(PoolBackend(workers=3)) as pooled:
        bounds = await pooled.pressure(DIAGONAL, 1.2, 9, cone="off")
    assert bounds.upper == expected.upper
    assert bounds.profile == expected.profile


@pytest.mark.asyncio
async def test_process_pool_runs_jobs():
    async with AsyncAffinity(PoolBackend(workers=2, kind="process")) as client:
        lo, hi = await client.jsr(DIAGONAL, 2)
    assert lo <= hi == pytest.approx(0.5, rel=1e-14)


@pytest.mark.asyncio
async def test_lyapunov_job_fills_energy():
    async with AsyncAffinity() as client:
        analysis = await client.lyapunov(DIAGONAL, [0.5, 0.5], 2000, 8, seed=1, s=1.5)
        estimate = await client.variational(DIAGONAL, [0.5, 0.5], 1.5, 2000, 8, seed=1)
    assert analysis.splitting == Splitting.DISTINCT
    assert analysis.energy == pytest.approx(-1.7167334, abs=1e-2)
    assert estimate.value <= DIAGONAL_P


@pytest.mark.asyncio
async def test_scan_stream_keeps_grid_order():
    spec = scan_spec([0.0, 0.01, 0.02, 0.03])
    async with AsyncAffinity(PoolBackend(workers=2)) as client:
        stream = await client.scan(spec, 1.5, 5, cone="off")
        rows = [row async for row in stream]
    assert stream.id == "scan"
    assert [row.t for row in rows] == [0.0, 0.01, 0.02, 0.03]
    assert rows[0].upper == pytest.approx(DIAGONAL_P, abs=1e-10)


@pytest.mark.asyncio
async def test_stream_reraises_job_errors():
    async with AsyncAffinity() as client:
        stream = await client.scan(scan_spec([0.0, 0.01]), 1.5, 0)
        with pytest.raises(InputError):
            async for _ in stream:
                pass


@pytest.mark.asyncio
async def test_falconer_stream():
    async with AsyncAffinity() as client:
        stream = await client.falconer(SMALL, trials=2, points=5000, seed=3)
        rows = [row async for row in stream]
        assert [row.trial for row in rows] == [0, 1]
        with pytest.raises(InputError):
            await client.falconer(DIAGONAL, trials=2, points=5000, seed=3)


@pytest.mark.asyncio
async def test_pool_backend_lifecycle():
    with pytest.raises(InputError):
        PoolBackend(kind="cluster")
    backend = PoolBackend()
    with pytest.raises(RuntimeError):
        await backend.submit(abs, -1)
    await backend.connect()
    assert await backend.submit(abs, -1) == 1
    assert backend.executor is not None
    await backend.close()
    assert InlineBackend().executor is None
