"""Tests for chunk planning and the Monte Carlo runner."""

import time

import pytest

from src.checking.mc_runner import MonteCarloRunner, plan_chunks
from src.data.models import McConfig
from src.errors import DomainError, NumericalError


def _sum_of_uniforms(chunk):
    return float(chunk.stream.generator.random(chunk.size).sum())


def _fail_on_second(chunk):
    if chunk.index == 1:
        raise ValueError("boom")
    return 0.0


def _domain_fail(chunk):
    raise DomainError("bad input")


class TestPlanChunks:

    def test_partition(self):
        chunks = plan_chunks(2500, 1000, 9, path=(0,))
        assert [c.size for c in chunks] == [1000, 1000, 500]
        assert [c.start for c in chunks] == [0, 1000, 2000]
        assert [c.stream.stream_id for c in chunks] == [0, 1, 2]
        assert all(c.stream.path == (0,) and c.stream.base_seed == 9 for c in chunks)

    def test_empty(self):
        assert plan_chunks(0, 100, 1) == []

    def test_group_is_carried(self):
        assert all(c.group == 3 for c in plan_chunks(50, 25, 1, group=3))


class TestMonteCarloRunner:

    def test_results_independent_of_worker_count(self):
        chunks = plan_chunks(10_000, 700, 42)
        inline = MonteCarloRunner(McConfig(n_workers=1)).run(chunks, _sum_of_uniforms)
        pooled = MonteCarloRunner(McConfig(n_workers=4)).run(chunks, _sum_of_uniforms)
        assert inline == pooled

    def test_callbacks_and_status(self):
        runner = MonteCarloRunner(McConfig())
        progress, seen, done = [], [], []
        runner.set_callbacks(
            on_chunk=lambda chunk, result: seen.append(chunk.index),
            on_progress=progress.append,
            on_complete=done.append
        )
        chunks = plan_chunks(400, 100, 1)
        results = runner.run(chunks, _sum_of_uniforms)
        assert seen == [0, 1, 2, 3]
        assert progress[-1] == pytest.approx(100.0)
        assert done == [results]
        assert runner.status.chunks_done == 4
        assert not runner.status.is_running
        assert runner.results == results

    @pytest.mark.parametrize("workers", [1, 3])
    def test_errors_carry_chunk_context(self, workers):
        runner = MonteCarloRunner(McConfig(n_workers=workers))
        errors = []
        runner.set_callbacks(on_error=errors.append)
        with pytest.raises(NumericalError, match="chunk 1"):
            runner.run(plan_chunks(300, 100, 1), _fail_on_second)
        assert errors and "boom" in errors[0]
        assert "boom" in runner.status.error_message

    def test_failure_cancels_pending_chunks(self):
        executed = []

        def fail_first(chunk):
            if chunk.index == 0:
                raise ValueError("boom")
            time.sleep(0.05)
            executed.append(chunk.index)
            return 0.0

        chunks = plan_chunks(2000, 100, 1)
        with pytest.raises(NumericalError, match="chunk 0"):
            MonteCarloRunner(McConfig(n_workers=2)).run(chunks, fail_first)
        assert len(executed) < len(chunks) - 1

    def test_domain_errors_keep_their_type(self):
        with pytest.raises(DomainError, match="bad input"):
            MonteCarloRunner(McConfig()).run(plan_chunks(100, 100, 1), _domain_fail)

    def test_stop_raises(self):
        runner = MonteCarloRunner(McConfig())
        runner.set_callbacks(on_chunk=lambda chunk, result: runner.stop())
        with pytest.raises(NumericalError, match="stopped after 1 of 3"):
            runner.run(plan_chunks(300, 100, 1), _sum_of_uniforms)

    def test_background_run(self):
        runner = MonteCarloRunner(McConfig(n_workers=2))
        chunks = plan_chunks(1000, 100, 5)
        runner.start(chunks, _sum_of_uniforms)
        runner.join(timeout=30)
        assert runner.results == MonteCarloRunner(McConfig()).run(chunks, _sum_of_uniforms)
