"""Smooth cut-off functions built from the ``exp(-1/x)`` glue."""

import numpy as np


def glue(x):
    """``exp(-1/x)`` for ``x > 0`` and 0 otherwise."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    x = np.asarray(x, dtype=float)
    a = glue(x)
    b = glue(1.0 - x)
    return a / (a + b)


def radial_cutoff(r, inner=1.0, outer=2.0):
    """1 for ``r <= inner``, 0 for ``r >= outer``, smooth in between."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - inner) / (outer - inner))


def plateau(x, a=0.0, b=1.0, margin=0.5):
    """1 on ``[a, b]``, supported in ``(a - margin, b + margin)``."""
    x = np.asarray(x, dtype=float)
    return smooth_step((x - a + margin) / margin) * smooth_step((b + margin - x) / margin)


def bump(r, radius=1.0):
    """``exp(-1/(1 - (r/radius)^2))``, supported in ``|r| < radius``; peak ``e^-1``."""
    return glue(1.0 - (np.asarray(r, dtype=float) / radius) ** 2)


def interval_bump(t, a=0.0, b=1.0):
    """``exp(-1/(s(1-s)))`` with ``s = (t-a)/(b-a)``; supported in ``(a, b)``."""
    s = (np.asarray(t, dtype=float) - a) / (b - a)
    out = np.zeros_like(s)
    inside = (s > 0) & (s < 1)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out
