"""Principal-branch Lambert W and the balanced-root boundary.

The Lambert W function solves w * exp(w) = x.  The principal branch W0
is real for x >= -1/e and satisfies W0 >= -1.  It is computed here with
Halley's method from a piecewise initial guess: a branch-point series
near x = -1/e and a log-based asymptote for large x.  Halley converges
cubically, so a handful of iterations reach full double precision away
from the branch point; accuracy degrades gracefully to about 1e-6 right
at the branch point, where the function has a square-root singularity.

The boundary function :func:`umslr_case_c_c2` returns, for 0 < c1 < 1,
the unique c2 > 1 with c2*ln(c2) + c1*ln(c1) = 0, i.e.
c2 = exp(W0(-c1*ln(c1))).  On this curve the derivative of the
uniform-root mean changes character: the mean sequence is monotone on
the curve and has an interior extremum strictly between 1 and 1/c1 off
it.
"""

from __future__ import annotations

import math

_BRANCH_X = -math.exp(-1.0)  # -1/e, left edge of the real domain
_DOMAIN_SLACK = 1e-15
_MAX_ITER = 100


def lambert_w0(x: float) -> float:
    """Principal-branch Lambert W at x >= -1/e (tiny slack below).

    Raises ValueError outside the domain.  The result w satisfies
    ``abs(w*exp(w) - x) <= 1e-12 * max(1, abs(x))`` except within about
    1e-6 of the branch point, where the value itself is accurate to
    roughly 1e-6.
    """
    x = float(x)
    if math.isnan(x):
        raise ValueError("lambert_w0: x is nan")
    if x < _BRANCH_X - _DOMAIN_SLACK:
        raise ValueError(f"lambert_w0: x={x!r} below -1/e")
    if x <= _BRANCH_X:
        return -1.0

    # Initial guess.
    if x < -0.25:
        # Branch-point series in p = sqrt(2(e*x + 1)).
        p = math.sqrt(max(0.0, 2.0 * (math.e * x + 1.0)))
        w = -1.0 + p - p * p / 3.0 + 11.0 * p**3 / 72.0
    elif x < math.e:
        w = math.log1p(x)
    else:
        l1 = math.log(x)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1

    # Halley iteration on f(w) = w*exp(w) - x.
    for _ in range(_MAX_ITER):
        ew = math.exp(w)
        f = w * ew - x
        w1 = w + 1.0
        step = f / (ew * w1 - (w + 2.0) * f / (2.0 * w1))
        w -= step
        if abs(step) < 1e-15 * (1.0 + abs(w)):
            break
    return max(w, -1.0)


def umslr_case_c_c2(c1: float) -> float:
    """The c2 > 1 balancing c1 in the sense c2*ln(c2) = -c1*ln(c1).

    Requires 0 < c1 < 1.  The returned value satisfies the residual
    condition ``abs(c2*ln(c2) + c1*ln(c1)) <= 1e-10``.
    """
    c1 = float(c1)
    if not (0.0 < c1 < 1.0):
        raise ValueError("umslr_case_c_c2 requires 0 < c1 < 1")
    return math.exp(lambert_w0(-c1 * math.log(c1)))
