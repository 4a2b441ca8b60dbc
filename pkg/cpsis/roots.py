# Licensed under the MIT license

import logging
from typing import Callable, NamedTuple, Tuple

from .types import RootNotBracketed

BISECTION_MAX_ITER = 80

log = logging.getLogger(__name__)


class Bisection(NamedTuple):
    root: float
    bracket: Tuple[float, float]
    iterations: int


def bisect(
    func: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float,
    max_iter: int = BISECTION_MAX_ITER,
) -> Bisection:
    """
    Root of `func` on [lo, hi] by plain bisection.

    The endpoint values must differ in sign. Stops when the bracket is
    narrower than `xtol`, when the midpoint is exactly a root, when the
    bracket can no longer be split in floating point, or after `max_iter`
    halvings.
    """
    f_lo = func(lo)
    f_hi = func(hi)
    if f_lo == 0:
        return Bisection(lo, (lo, lo), 0)
    if f_hi == 0:
        return Bisection(hi, (hi, hi), 0)
    if (f_lo < 0) == (f_hi < 0):
        raise RootNotBracketed(
            f"no sign change on [{lo:.6g}, {hi:.6g}]: f={f_lo:.6g}, {f_hi:.6g}"
        )

    iterations = 0
    while hi - lo > xtol and iterations < max_iter:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = func(mid)
        iterations += 1
        if f_mid == 0:
            return Bisection(mid, (mid, mid), iterations)
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid

    log.debug(f"bisection stopped after {iterations} steps on [{lo!r}, {hi!r}]")
    return Bisection(0.5 * (lo + hi), (lo, hi), iterations)
