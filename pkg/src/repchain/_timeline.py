from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import DomainError


def build_timeline(T: float, dt: float, sample_every: int = 1,
                   sample_times: Iterable[float] = ()) -> tuple[np.ndarray, np.ndarray]:
    """Step end times from 0 to ``T`` and a mask of times to record.

    Nominal times are ``k * dt``; requested ``sample_times`` are inserted as
    breakpoints (the step crossing them is split) so snapshots land on them
    exactly.  Time 0, every ``sample_every``-th nominal step, every requested
    time and ``T`` are recorded.
    """
    if not T > 0:
        raise DomainError("final time T must be positive")
    if not dt > 0:
        raise DomainError("time step must be positive")
    if sample_every < 1:
        raise DomainError("sample_every must be >= 1")
    n = int(np.ceil(T / dt - 1e-9))
    nominal = np.arange(n + 1, dtype=float) * dt
    nominal[-1] = T
    record = np.zeros(n + 1, dtype=bool)
    record[::sample_every] = True
    record[-1] = True

    extra = sorted({float(s) for s in sample_times if 0 <= s <= T})
    if not extra:
        return nominal, record
    merge_tol = 1e-9 * dt
    times = list(nominal)
    flags = list(record)
    for s in extra:
        k = int(np.searchsorted(nominal, s))
        hit = None
        for j in (k - 1, k):
            if 0 <= j < nominal.size and abs(nominal[j] - s) <= merge_tol:
                hit = j
        if hit is not None:
            continue
        times.append(s)
        flags.append(True)
    order = np.argsort(times, kind="stable")
    times_arr = np.asarray(times)[order]
    flags_arr = np.asarray(flags)[order]
    for s in extra:
        j = int(np.argmin(np.abs(times_arr - s)))
        times_arr[j] = s
        flags_arr[j] = True
    return times_arr, flags_arr


def find_time(times: np.ndarray, t: float) -> int | None:
    """Index of ``t`` in ``times`` up to a relative tolerance, else None."""
    if len(times) == 0:
        return None
    times = np.asarray(times)
    j = int(np.argmin(np.abs(times - t)))
    if abs(times[j] - t) <= 1e-9 * max(1.0, abs(t)):
        return j
    return None
