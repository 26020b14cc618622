"""Lower bounds on the frame potential and optimality certificates.

Three regimes are distinguished:

* ``REGULAR`` -- the optimum is a tight frame, ``G = (sum c_i^2 / d) I``;
* ``IRREGULAR`` -- the ``k0`` heaviest sensors take mutually orthogonal
  directions and the rest form a tight frame in the orthogonal complement;
* ``SQUARE`` -- ``n == d``; the optimum is an orthogonal basis whatever the
  weights.

The optimality error is ``||G||^2`` minus the regime's bound.  For the
regular and square regimes it is evaluated through an algebraically equal
sum of squares so that it stays accurate down to round-off of the error
itself rather than of ``||G||^2``.
"""

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .coefficients import as_coefficients, irregularity, irregularity_k0
from .errors import ContractError
from .linalg import frobenius_sq
from .sensors import coefficients_of, frame_matrix

DEFAULT_TOL = 1e-6
#: Errors in [-NEGATIVE_FLOOR * max(1, bound), 0) are reported as zero.
NEGATIVE_FLOOR = 1e-9


class Regime(enum.Enum):
    REGULAR = "regular"
    IRREGULAR = "irregular"
    SQUARE = "square"


@dataclass(frozen=True)
class OptimalityCertificate:
    """Outcome of checking one placement against its regime's optimum.

    ``residual`` is the quantity compared against ``tol``: the Frobenius
    distance of ``G`` from a multiple of the identity (regular), the largest
    ``|g_i . g_j|`` between distinct sensors (square), or the larger of the
    orthogonality defect and the sub-certificate residual (irregular).
    """

    bound: float
    objective: float
    error: float
    regime: Regime
    k0: int
    verdict: bool
    tol: float
    residual: float
    detail: dict = field(default_factory=dict)


def lower_bound_sorted(c2_desc, d):
    """Vectorised lower bound of ``||G||^2`` for squared weights sorted non-increasingly."""
    c2 = np.asarray(c2_desc, dtype=float)
    k0 = irregularity_k0(c2, d)
    n = c2.shape[-1]
    idx = np.arange(n)
    dominant = idx < k0[..., None]
    head = np.sum(np.where(dominant, c2 * c2, 0.0), axis=-1)
    tail = np.sum(np.where(dominant, 0.0, c2), axis=-1)
    return head + tail * tail / (d - k0)


def lower_bound(coeffs, d):
    """Smallest achievable ``||G||^2`` for these weights in dimension ``d``.

    ``(sum c_i^2)^2 / d`` for regular sequences; otherwise
    ``sum_{i<=k0} c_i^4 + (sum_{i>k0} c_i^2)^2 / (d - k0)`` on the sorted
    sequence.  When ``n == d`` both reduce to ``sum c_i^4``.
    """
    c = as_coefficients(coeffs)
    return float(lower_bound_sorted(c.squared[c.sort_order], d))


def _floor(err, bound):
    if -NEGATIVE_FLOOR * max(1.0, bound) <= err < 0.0:
        return 0.0
    return float(err)


def _complement_basis(vectors, d):
    """Orthonormal basis (columns) of the orthogonal complement of ``vectors`` (rows)."""
    a = np.asarray(vectors, dtype=float).reshape(-1, d).T
    q, _ = np.linalg.qr(a, mode="complete")
    return q[:, a.shape[1]:]


def _regular_residual(c2, g):
    m = g.shape[1]
    gmat = frame_matrix(c2, g)
    target = np.sum(c2) / m
    return float(np.sqrt(frobenius_sq(gmat - target * np.eye(m))))


def _certify_arrays(c, g, tol, square_case=True):
    n, d = g.shape
    if c.size != n:
        raise ContractError("one coefficient per sensor is required")
    if n < d:
        raise ContractError(f"need at least d={d} sensors, got {n}")
    c2 = c ** 2
    gmat = frame_matrix(c2, g)
    obj = float(frobenius_sq(gmat))
    report = irregularity(c, d)
    k0 = report.k0
    bound = lower_bound(c, d)
    gram = g @ g.T

    if n == d and square_case:
        off = gram - np.diag(np.diag(gram))
        err = float(np.sum(np.outer(c2, c2) * off ** 2))
        residual = float(np.max(np.abs(off))) if n > 1 else 0.0
        return OptimalityCertificate(bound, obj, _floor(err, bound), Regime.SQUARE, k0,
                                     residual <= tol, tol, residual)

    if k0 == 0:
        centred = gmat - (np.sum(c2) / d) * np.eye(d)
        err = float(frobenius_sq(centred))
        residual = float(np.sqrt(err))
        return OptimalityCertificate(bound, obj, _floor(err, bound), Regime.REGULAR, 0,
                                     residual <= tol, tol, residual)

    dom = np.array(report.dominant)
    res = np.array(report.residual)
    cross = np.abs(gram[dom])
    cross[np.arange(k0), dom] = 0.0
    ortho = float(np.max(cross))

    # error = cross terms touching dominant sensors + residual frame excess
    w = np.outer(c2, c2) * gram ** 2
    touching = np.zeros((n, n), dtype=bool)
    touching[dom, :] = True
    touching[:, dom] = True
    np.fill_diagonal(touching, False)
    tail = float(np.sum(c2[res]))
    g_res = frame_matrix(c2[res], g[res])
    err = float(np.sum(w[touching])) + (float(frobenius_sq(g_res)) - tail * tail / (d - k0))

    basis = _complement_basis(g[dom], d)
    projected = g[res] @ basis
    sub_residual = _regular_residual(c2[res], projected)
    sub_bound = tail * tail / (d - k0)
    sub_obj = float(frobenius_sq(frame_matrix(c2[res], projected)))
    sub = OptimalityCertificate(
        bound=sub_bound, objective=sub_obj, error=_floor(sub_obj - sub_bound, sub_bound),
        regime=Regime.REGULAR, k0=0, verdict=sub_residual <= tol, tol=tol,
        residual=sub_residual,
    )
    residual = max(ortho, sub_residual)
    detail = {
        "dominant": report.dominant,
        "residual_sensors": report.residual,
        "orthogonality": ortho,
        "complement_basis": basis,
        "sub_certificate": sub,
    }
    return OptimalityCertificate(bound, obj, _floor(err, bound), Regime.IRREGULAR, k0,
                                 residual <= tol, tol, residual, detail)


def certify_bearings(coeffs, bearings, tol=DEFAULT_TOL, square_case=True):
    """Certificate for unit bearings with the given weights.

    With ``square_case=False`` an ``n == d`` network is judged by the
    regular/irregular test instead of the orthogonal-basis test; both reach
    the same verdict on exact inputs.
    """
    c = as_coefficients(coeffs).values
    g = np.asarray(bearings, dtype=float)
    if g.ndim != 2:
        raise ContractError("bearings must be a 2-D array")
    return _certify_arrays(c, g, tol, square_case)


def certify(placement, specs, tol=DEFAULT_TOL):
    """Check whether ``placement`` attains the lower bound for ``specs``' weights."""
    if len(specs) != placement.n:
        raise ContractError("one sensor spec per sensor is required")
    return _certify_arrays(coefficients_of(specs).values, placement.bearings, tol)


def optimality_error(placement, specs):
    """``||G||^2`` minus its lower bound, floored at zero within round-off."""
    return certify(placement, specs).error


def optimality_error_bearings(coeffs, bearings):
    return certify_bearings(coeffs, bearings).error
