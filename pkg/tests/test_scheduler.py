from __future__ import annotations

import threading

import pytest

from ovqite.scheduler import SerialScheduler, ThreadScheduler, make_scheduler


def test_make_scheduler():
    assert isinstance(make_scheduler(1), SerialScheduler)
    scheduler = make_scheduler(3)
    assert isinstance(scheduler, ThreadScheduler)
    assert scheduler.workers == 3


@pytest.mark.parametrize("scheduler", [SerialScheduler(), ThreadScheduler(4)])
def test_results_keep_input_order(scheduler):
    with scheduler:
        assert scheduler.map(lambda x: x * x, range(20)) == [x * x for x in range(20)]


def test_threads_are_used():
    names = set()

    def record(_):
        names.add(threading.current_thread().name)

    with ThreadScheduler(2) as scheduler:
        scheduler.map(record, range(8))

    assert all(name.startswith("ovqite") for name in names)


def test_close_is_idempotent():
    scheduler = ThreadScheduler(2)
    scheduler.map(str, [1])
    scheduler.close()
    scheduler.close()
    assert scheduler.map(str, [2]) == ["2"]
    scheduler.close()


def test_invalid_worker_count():
    with pytest.raises(ValueError):
        ThreadScheduler(0)
