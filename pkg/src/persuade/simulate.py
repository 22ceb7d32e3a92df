"""Monte Carlo estimates of a scheme's performance.

Sampling uses counter-based Philox streams keyed by (seed, chunk index),
so a run is reproducible bit for bit regardless of how many worker threads
execute the chunks: every chunk owns an independent stream and the
per-chunk sums are merged in chunk order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .model import Instance, sample_state

__all__ = ["SignalStats", "SimReport", "estimate"]

_CHUNK = 4096
_MASK64 = 2**64 - 1


@dataclass(frozen=True)
class SignalStats:
    """Frequency of one signal and the receiver value conditioned on it."""

    count: int
    frequency: float
    receiver_mean: float
    receiver_stderr: float


@dataclass(frozen=True)
class SimReport:
    samples: int
    sender_mean: float
    sender_stderr: float
    receiver_mean: float
    receiver_stderr: float
    signals: Mapping[int, SignalStats]


class _Sums:
    """Plain accumulators; one instance per chunk, merged in chunk order."""

    __slots__ = ("n", "xi", "xi2", "rho", "rho2", "per_signal")

    def __init__(self) -> None:
        self.n = 0
        self.xi = 0.0
        self.xi2 = 0.0
        self.rho = 0.0
        self.rho2 = 0.0
        self.per_signal: dict[int, list[float]] = {}

    def merge(self, other: "_Sums") -> None:
        self.n += other.n
        self.xi += other.xi
        self.xi2 += other.xi2
        self.rho += other.rho
        self.rho2 += other.rho2
        for sig, (cnt, s1, s2) in other.per_signal.items():
            mine = self.per_signal.setdefault(sig, [0, 0.0, 0.0])
            mine[0] += cnt
            mine[1] += s1
            mine[2] += s2


def _run_chunk(scheme, instance: Instance, seed: int, chunk_index: int, count: int) -> _Sums:
    rng = np.random.Generator(np.random.Philox(key=[seed & _MASK64, chunk_index]))
    sums = _Sums()
    for _ in range(count):
        state = sample_state(instance, rng)
        try:
            slot = scheme.recommend(state, rng)
        except Exception as exc:
            ids = tuple(t.id for t in state)
            raise RuntimeError(f"scheme failed on state {ids}") from exc
        xi = float(state[slot].xi)
        rho = float(state[slot].rho)
        sums.n += 1
        sums.xi += xi
        sums.xi2 += xi * xi
        sums.rho += rho
        sums.rho2 += rho * rho
        per = sums.per_signal.setdefault(slot, [0, 0.0, 0.0])
        per[0] += 1
        per[1] += rho
        per[2] += rho * rho
    return sums


def _mean_stderr(n: int, s1: float, s2: float) -> tuple[float, float]:
    if n == 0:
        return 0.0, 0.0
    mean = s1 / n
    if n == 1:
        return mean, 0.0
    var = max((s2 - n * mean * mean) / (n - 1), 0.0)
    return mean, math.sqrt(var / n)


def estimate(
    scheme,
    instance: Instance,
    samples: int,
    seed: int,
    threads: int | None = None,
) -> SimReport:
    """Estimate scheme utilities by simulation.

    The scheme only needs a ``recommend(state, rng)`` method.  Given the
    same seed the report is identical bit for bit, with or without
    threads.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    chunks = [
        (index, min(_CHUNK, samples - start))
        for index, start in enumerate(range(0, samples, _CHUNK))
    ]

    def run(job: tuple[int, int]) -> _Sums:
        index, count = job
        return _run_chunk(scheme, instance, seed, index, count)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(job) for job in chunks]

    total = _Sums()
    for sums in results:
        total.merge(sums)

    sender_mean, sender_stderr = _mean_stderr(total.n, total.xi, total.xi2)
    receiver_mean, receiver_stderr = _mean_stderr(total.n, total.rho, total.rho2)
    signals = {}
    for sig in sorted(total.per_signal):
        cnt, s1, s2 = total.per_signal[sig]
        mean, stderr = _mean_stderr(cnt, s1, s2)
        signals[sig] = SignalStats(
            count=cnt,
            frequency=cnt / total.n,
            receiver_mean=mean,
            receiver_stderr=stderr,
        )
    return SimReport(
        samples=total.n,
        sender_mean=sender_mean,
        sender_stderr=sender_stderr,
        receiver_mean=receiver_mean,
        receiver_stderr=receiver_stderr,
        signals=signals,
    )
