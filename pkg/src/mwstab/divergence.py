"""Relative entropy with the usual 0 ln 0 = 0 conventions."""

import numpy as np

from .errors import DimensionError, DomainError, SupportError


def relative_entropy(P, Q) -> float:
    """``sum P_i ln(P_i / Q_i)``; requires ``supp(P)`` inside ``supp(Q)``."""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.shape != Q.shape or P.ndim != 1:
        raise DimensionError(f"shape mismatch {P.shape} vs {Q.shape}")
    if np.any(P < 0) or np.any(Q < 0):
        raise DomainError("relative entropy needs non-negative vectors")
    on = P > 0
    if np.any(Q[on] == 0):
        raise SupportError("support of P is not contained in the support of Q")
    return float(np.sum(P[on] * np.log(P[on] / Q[on])))
