"""Coefficient sequences and their irregularity with respect to a dimension.

A sequence is *regular* for dimension ``d`` when no squared coefficient
exceeds the average squared mass per dimension.  Otherwise the ``k0``
largest coefficients dominate and claim their own orthogonal directions.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractError

#: Relative slack on every fundamental-inequality comparison.
REL_SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class CoefficientSequence:
    """Positive per-sensor weights ``c_i`` in the caller's sensor order."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float).reshape(-1)
        if v.size == 0:
            raise ContractError("coefficient sequence is empty")
        if not np.all(np.isfinite(v)) or np.any(v <= 0.0):
            raise ContractError("coefficients must be finite and strictly positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.size

    @property
    def n(self):
        return self.values.size

    @property
    def squared(self):
        return self.values ** 2

    @property
    def total(self):
        """Sum of squared coefficients, the trace of the frame operator."""
        return float(np.sum(self.values ** 2))

    @cached_property
    def sort_order(self):
        """Indices that sort the values non-increasingly; ties keep input order."""
        return np.argsort(-self.values, kind="stable")

    def scaled(self, factor):
        return CoefficientSequence(self.values * factor)

    def subset(self, indices):
        return CoefficientSequence(self.values[np.asarray(indices, dtype=int)])


def as_coefficients(coeffs):
    if isinstance(coeffs, CoefficientSequence):
        return coeffs
    return CoefficientSequence(coeffs)


@dataclass(frozen=True)
class IrregularityReport:
    k0: int
    d: int
    dominant: tuple
    residual: tuple

    @property
    def regular(self):
        return self.k0 == 0


def irregularity_k0(c2_desc, d):
    """Vectorised irregularity of squared coefficients sorted non-increasingly.

    Parameters
    ----------
    c2_desc : array_like, shape (..., n)
        Squared coefficients, each row sorted in non-increasing order.
    d : int
        Dimension, ``1 <= d <= n``.

    Returns
    -------
    ndarray of int, shape (...)
    """
    c2 = np.asarray(c2_desc, dtype=float)
    n = c2.shape[-1]
    if not 1 <= d <= n:
        raise ContractError(f"need 1 <= d <= n, got d={d}, n={n}")
    tail = np.cumsum(c2[..., ::-1], axis=-1)[..., ::-1]
    slack = REL_SLACK * tail[..., 0]
    k0 = np.full(c2.shape[:-1], d - 1, dtype=int)
    decided = np.zeros(c2.shape[:-1], dtype=bool)
    for k in range(d):
        ok = c2[..., k] <= tail[..., k] / (d - k) + slack
        k0 = np.where(ok & ~decided, k, k0)
        decided |= ok
    return k0


def irregularity(coeffs, d):
    """Irregularity ``k0`` of a coefficient sequence with respect to ``d``.

    ``k0`` is the smallest ``k >= 0`` with
    ``c_(k+1)^2 <= sum_{i > k} c_(i)^2 / (d - k)`` on the non-increasingly
    sorted sequence.  It always satisfies ``0 <= k0 <= d - 1``.

    The report's ``dominant`` and ``residual`` hold original sensor indices.
    """
    coeffs = as_coefficients(coeffs)
    order = coeffs.sort_order
    k0 = int(irregularity_k0(coeffs.squared[order], d))
    return IrregularityReport(
        k0=k0,
        d=d,
        dominant=tuple(int(i) for i in order[:k0]),
        residual=tuple(int(i) for i in order[k0:]),
    )


def is_regular(coeffs, d):
    """True when ``max c_j^2 <= (1/d) sum c_i^2`` (the fundamental inequality)."""
    return irregularity(coeffs, d).k0 == 0


def range_regularity_check(ranges, d):
    """Fundamental inequality for equal-noise bearing-only/RSS networks.

    With equal noise, ``c_i`` is proportional to ``1 / ||r_i||``, so regularity
    means no sensor is much closer to the target than the others.
    """
    r = np.asarray(ranges, dtype=float).reshape(-1)
    if r.size == 0 or not np.all(np.isfinite(r)) or np.any(r <= 0.0):
        raise ContractError("ranges must be finite and strictly positive")
    return is_regular(1.0 / r, d)
