"""Iterated-logarithm helpers shared by every normalizer in the package."""

from __future__ import annotations

import math

E = math.e


def iterated_log(u: float) -> float:
    """log(log(max(u, e))): clamped so small arguments never go negative."""
    return math.log(math.log(max(float(u), E)))


def lil_scale(n: float) -> float:
    """The normalizer sqrt(2 * iterated_log(n)).

    Zero for n <= 2 under the clamping convention; callers that divide by it
    must require n >= 3.
    """
    return math.sqrt(2.0 * iterated_log(n))
