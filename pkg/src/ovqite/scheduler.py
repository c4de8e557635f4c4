from __future__ import annotations

import abc
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from types import TracebackType
from typing import TypeVar

T = TypeVar("T")
U = TypeVar("U")


class Scheduler(abc.ABC):
    """Maps independent tasks, returning results in input order."""

    @abc.abstractmethod
    def map(self, fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
        ...

    @abc.abstractmethod
    def close(self) -> None:
        ...

    def __enter__(self) -> Scheduler:
        return self

    def __exit__(
        self,
        exc_type: type[BaseException] | None,
        exc_val: BaseException | None,
        exc_tb: TracebackType | None,
    ) -> None:
        self.close()


class SerialScheduler(Scheduler):
    def map(self, fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
        return [fn(item) for item in items]

    def close(self) -> None:
        pass


class ThreadScheduler(Scheduler):
    def __init__(self, workers: int) -> None:
        if workers < 1:
            raise ValueError(f"Number of workers must be positive, got {workers}.")

        self.workers = workers
        self._executor: ThreadPoolExecutor | None = None

    def get_executor(self) -> ThreadPoolExecutor:
        if self._executor is None:
            self._executor = ThreadPoolExecutor(
                max_workers=self.workers, thread_name_prefix="ovqite"
            )
        return self._executor

    def map(self, fn: Callable[[T], U], items: Iterable[T]) -> list[U]:
        return list(self.get_executor().map(fn, items))

    def close(self) -> None:
        if not self._executor:
            return

        executor = self._executor
        self._executor = None
        executor.shutdown(wait=True, cancel_futures=True)


def make_scheduler(workers: int = 1) -> Scheduler:
    if workers <= 1:
        return SerialScheduler()
    return ThreadScheduler(workers)
