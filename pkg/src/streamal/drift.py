"""Adaptive-windowing (ADWIN) change detector over a [0, 1] value stream.

The window is kept as an exponential histogram: per level at most
``max_buckets`` buckets, each bucket at level ``i`` summarizing ``2**i``
values by their sum. After every insert the detector scans the bucket
boundaries; if two sub-windows have means further apart than the cut
threshold, the older sub-window is dropped.
"""

from __future__ import annotations

import math

from .core import DomainError


def adwin_cut_threshold(m: float, delta_prime: float) -> float:
    """Mean-difference needed to call a cut: sqrt(ln(4/delta') / (2m)).

    ``m`` is the harmonic-mean term ``1 / (1/n0 + 1/n1)`` of the two
    sub-window sizes and ``delta'`` the per-cut confidence.
    """
    if m <= 0:
        raise DomainError("m must be positive")
    if not 0 < delta_prime < 1:
        raise DomainError("delta' must lie in (0, 1)")
    return math.sqrt(math.log(4.0 / delta_prime) / (2.0 * m))


class Adwin:
    """ADWIN change detector.

    Parameters
    ----------
    delta: float (default=0.002)
        Detection confidence; smaller is more conservative. Each scan uses
        the corrected per-cut confidence ``delta / n``.

    max_buckets: int (default=5)
        Bucket capacity per histogram level before two oldest merge up.
    """

    def __init__(self, delta: float = 0.002, max_buckets: int = 5):
        if not 0 < delta < 1:
            raise DomainError(f"delta must lie in (0, 1), got {delta}")
        self.delta = delta
        self.max_buckets = max_buckets
        # level i holds sums of buckets spanning 2**i values, oldest first
        self._levels: list[list[float]] = [[]]
        self._n = 0
        self._sum = 0.0
        self.n_detections = 0

    @property
    def width(self) -> int:
        """Number of values currently retained."""
        return self._n

    @property
    def mean(self) -> float:
        return self._sum / self._n if self._n else 0.0

    def update(self, value: float) -> bool:
        """Insert one value; return True if a change was detected (window cut)."""
        v = float(value)
        if not 0.0 <= v <= 1.0 or not math.isfinite(v):
            raise DomainError(f"ADWIN values must lie in [0, 1], got {value!r}")
        self._insert(v)
        drift = self._shrink()
        if drift:
            self.n_detections += 1
        return drift

    # -- internals --

    def _insert(self, v: float):
        self._levels[0].append(v)
        self._n += 1
        self._sum += v
        level = 0
        while len(self._levels[level]) > self.max_buckets:
            if level + 1 == len(self._levels):
                self._levels.append([])
            oldest = self._levels[level].pop(0)
            second = self._levels[level].pop(0)
            self._levels[level + 1].append(oldest + second)
            level += 1

    def _buckets_old_to_new(self):
        for level in range(len(self._levels) - 1, -1, -1):
            size = 1 << level
            for bucket_sum in self._levels[level]:
                yield size, bucket_sum

    def _find_cut(self) -> int | None:
        """Index (bucket count from the old end) of the first failing cut."""
        if self._n < 2:
            return None
        log_term = math.log(4.0 * self._n / self.delta)
        n0 = 0
        s0 = 0.0
        for idx, (size, bucket_sum) in enumerate(self._buckets_old_to_new(), start=1):
            n0 += size
            s0 += bucket_sum
            n1 = self._n - n0
            if n1 <= 0:
                break
            m = 1.0 / (1.0 / n0 + 1.0 / n1)
            eps = math.sqrt(log_term / (2.0 * m))
            if abs(s0 / n0 - (self._sum - s0) / n1) >= eps:
                return idx
        return None

    def _shrink(self) -> bool:
        changed = False
        while True:
            cut = self._find_cut()
            if cut is None:
                return changed
            changed = True
            self._drop_oldest(cut)

    def _drop_oldest(self, count: int):
        for level in range(len(self._levels) - 1, -1, -1):
            row = self._levels[level]
            size = 1 << level
            while row and count > 0:
                self._n -= size
                self._sum -= row.pop(0)
                count -= 1
            if count == 0:
                break
        while len(self._levels) > 1 and not self._levels[-1]:
            self._levels.pop()
