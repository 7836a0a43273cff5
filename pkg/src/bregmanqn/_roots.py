"""Safeguarded Newton in log-space for strictly monotone scalar equations.

Both determinant-side scalar solves (the scaling equation of the weighted
updates and the dual-coordinate inversion) are strictly monotone in log z,
so one bracketed Newton with bisection fallback serves both.
"""

from __future__ import annotations

import numpy as np

from .errors import MaxIterations, RootNotBracketed

# exp() overflows just above 709; stay inside.
LD_CAP = 700.0


def newton_bisect_log(g, dg, ld_init, lo, hi, increasing, converged, max_iter=200):
    """Root of g(ld) = 0 with g monotone in ld.

    g, dg:      function and derivative of ld = log z
    ld_init:    Newton start, clipped into the bracket
    lo, hi:     initial bracket in ld; expanded (up to +-LD_CAP) if the sign
                change lies outside
    increasing: direction of monotonicity of g
    converged:  callable ld -> bool, the caller's stopping criterion
    """
    sign = 1.0 if increasing else -1.0

    glo = sign * g(lo)
    step = 0.5 * (hi - lo)
    while glo > 0.0:
        if lo <= -LD_CAP:
            raise RootNotBracketed(
                f"no sign change down to log z = {lo:.1f}; target outside range"
            )
        lo = max(lo - step, -LD_CAP)
        step *= 2.0
        glo = sign * g(lo)

    ghi = sign * g(hi)
    step = 0.5 * (hi - lo)
    while ghi < 0.0:
        if hi >= LD_CAP:
            raise RootNotBracketed(
                f"no sign change up to log z = {hi:.1f}; target outside range"
            )
        hi = min(hi + step, LD_CAP)
        step *= 2.0
        ghi = sign * g(hi)

    ld = float(np.clip(ld_init, lo, hi))
    for _ in range(max_iter):
        if converged(ld):
            return ld
        gval = g(ld)
        if sign * gval > 0.0:
            hi = ld
        else:
            lo = ld
        dval = dg(ld)
        use_bisect = True
        if np.isfinite(gval) and np.isfinite(dval) and dval != 0.0:
            cand = ld - gval / dval
            if lo < cand < hi:
                ld = cand
                use_bisect = False
        if use_bisect:
            ld = 0.5 * (lo + hi)
    raise MaxIterations(f"scalar solve did not converge within {max_iter} iterations")
