import asyncio
from typing import Any


class RowStream:
    """Rows of a running job, in production order; ends at the ``None`` sentinel.

    An exception put on the queue is re-raised by the consumer.
    """

    def __init__(self, name: str, queue: asyncio.Queue):
        self.name = name
        self.queue = queue

    @property
    def id(self) -> str:
        return self.name

    def __aiter__(self):
        return self

    async def __anext__(self) -> Any:
        row = await self.queue.get()
        if row is None:
            raise StopAsyncIteration
        if isinstance(row, BaseException):
            raise row
        return row
