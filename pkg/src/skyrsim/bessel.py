"""Modified Bessel function of the second kind, order one.

Thin wrapper over scipy's Cephes implementation plus the domain checks
the force law relies on. scipy.special.k1 is accurate to ~1e-15 relative
over the range used here; the test suite checks it against an independent
series/asymptotic oracle.
"""

from __future__ import annotations

import numpy as np
from scipy.special import k1 as _scipy_k1

from .errors import DomainError


def bessel_k1(x):
    """K_1(x) for x > 0. Scalar in, scalar out; array in, array out."""
    arr = np.asarray(x, dtype=float)
    if arr.size == 0:
        return arr.copy()
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("bessel_k1 requires finite x > 0")
    out = _scipy_k1(arr)
    if np.ndim(x) == 0:
        return float(out)
    return out
