"""Tests for the worker budget and the ordered thread pool"""

import threading

from modules.parallel import THREADS_ENV, in_worker, ordered_map, resolve_workers


class TestResolveWorkers:
    def test_explicit_value_wins(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_workers(5) == 5

    def test_reads_environment(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "3")
        assert resolve_workers() == 3
        assert resolve_workers(0) == 3

    def test_zero_means_auto(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "0")
        assert resolve_workers() >= 1

    def test_garbage_falls_back_to_auto(self, monkeypatch):
        monkeypatch.setenv(THREADS_ENV, "many")
        assert resolve_workers() >= 1

    def test_unset_means_auto(self, monkeypatch):
        monkeypatch.delenv(THREADS_ENV, raising=False)
        assert resolve_workers() >= 1


class TestOrderedMap:
    def test_keeps_input_order(self):
        items = list(range(40))
        assert ordered_map(lambda x: x * x, items, workers=4) == [x * x for x in items]

    def test_serial_path(self):
        assert ordered_map(str, [3, 1, 2], workers=1) == ["3", "1", "2"]

    def test_empty(self):
        assert ordered_map(lambda x: x, [], workers=4) == []

    def test_uses_threads_when_allowed(self):
        seen = set()
        barrier = threading.Barrier(2, timeout=5)

        def job(x):
            seen.add(threading.get_ident())
            barrier.wait()
            return x

        assert ordered_map(job, [0, 1], workers=2) == [0, 1]
        assert len(seen) == 2

    def test_nested_maps_stay_on_the_outer_thread(self):
        def outer(x):
            owner = threading.get_ident()
            inner = ordered_map(lambda y: threading.get_ident(), range(6), workers=4)
            return inner == [owner] * 6 and in_worker()

        assert ordered_map(outer, range(8), workers=4) == [True] * 8
        assert not in_worker()
