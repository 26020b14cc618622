"""Explicit constructors for optimal placements.

Constructors return bearings packed into a :class:`Placement`; pass
``ranges`` to attach sensor-target distances (unit ranges otherwise).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coefficients import as_coefficients, irregularity, is_regular
from .errors import (ConstructionFailure, ContractError, InfeasibleError,
                     PreconditionViolation)
from .geometry import Placement, random_unit_vectors
from .linalg import sign_canonical
from .optimality import OptimalityCertificate, _regular_residual, certify_bearings

logger = logging.getLogger(__name__)

#: Constructors must certify to within this many multiples of max(1, sum c_i^2).
CERTIFY_REL_TOL = 1e-9


def _certify_tol(c2):
    return CERTIFY_REL_TOL * max(1.0, float(np.sum(c2)))


def _placement(bearings, ranges):
    return Placement.from_bearings(bearings, ranges)


# -- 2D ------------------------------------------------------------------------

@dataclass(frozen=True)
class TriangleDecomposition:
    """Split of the squared weights into three triangle sides.

    ``n0`` is the 1-based split index: sensors ``1..n0-1`` share one doubled
    bearing, sensor ``n0`` takes the second and sensors ``n0+1..n`` the third.
    ``alpha12`` and ``alpha13`` are the interior angles between sides
    ``(l1, l2)`` and ``(l1, l3)``.
    """

    n0: int
    l1: float
    l2: float
    l3: float
    alpha12: float
    alpha13: float


def _law_of_cosines(a, b, opposite):
    if a == 0.0 or b == 0.0:
        return np.pi / 2.0
    cos = (a * a + b * b - opposite * opposite) / (2.0 * a * b)
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def triangle_decomposition(c2):
    """Triangle sides and angles for squared weights ``c2`` (input order kept).

    ``n0`` is the smallest index ``>= 2`` whose prefix sum reaches half the
    total mass.  Weights must satisfy ``max c2 <= sum(c2) / 2``.
    """
    c2 = np.asarray(c2, dtype=float)
    n = c2.size
    if n < 2:
        raise ContractError("need at least two sensors in 2D")
    total = float(np.sum(c2))
    half = 0.5 * total
    slack = 1e-12 * total
    if np.max(c2) > half + slack:
        raise InfeasibleError(
            "weights are irregular in 2D: a 2D tight placement needs "
            "max c_j^2 <= (1/2) sum c_i^2")
    prefix = np.cumsum(c2)
    n0 = next(k for k in range(2, n + 1) if prefix[k - 1] >= half - slack)
    l1 = float(prefix[n0 - 2])
    l2 = float(c2[n0 - 1])
    l3 = max(total - l1 - l2, 0.0) if n0 < n else 0.0
    alpha12 = _law_of_cosines(l1, l2, l3)
    alpha13 = _law_of_cosines(l1, l3, l2)
    return TriangleDecomposition(n0, l1, l2, l3, alpha12, alpha13)


def _canonical_angle(theta):
    """Representative of ``theta`` modulo pi in (-pi/2, pi/2]."""
    return np.pi / 2.0 - np.mod(np.pi / 2.0 - theta, np.pi)


def _tight_2d(c2):
    """Bearings (n, 2) with ``sum c2_i g_i g_i^T = sum(c2)/2 I``; zero weights allowed."""
    c2 = np.asarray(c2, dtype=float)
    active = np.flatnonzero(c2 > 0.0)
    theta = np.zeros(c2.size)
    tri = triangle_decomposition(c2[active])
    k = np.arange(active.size) + 1
    sub = np.where(k < tri.n0, 0.0,
                   np.where(k == tri.n0, (np.pi + tri.alpha12) / 2.0, (np.pi - tri.alpha13) / 2.0))
    theta[active] = _canonical_angle(sub)
    theta[active[k < tri.n0]] = 0.0
    return np.column_stack([np.cos(theta), np.sin(theta)])


def construct_2d(coeffs, ranges=None):
    """Tight 2D placement for any regular weights.

    Sensors before the split share the bearing ``[1, 0]``; the split sensor
    and the remaining block sit at half the exterior angles of the triangle
    built from the weight sums.  Bearings are reported with angle in
    ``(-pi/2, pi/2]`` (a flip through the target gives an equivalent
    placement).
    """
    c = as_coefficients(coeffs)
    if c.n < 2 or not is_regular(c, 2):
        raise InfeasibleError(
            "no 2D optimal placement reaches (1/2)(sum c_i^2)^2: the weights violate "
            "max c_j^2 <= (1/2) sum c_i^2")
    return _placement(_tight_2d(c.squared), ranges)


# -- n = d and n = d + 1 ------------------------------------------------------------

def construct_square(coeffs, d, ranges=None):
    """Axis-aligned orthonormal bearings, optimal for ``n == d`` whatever the weights."""
    c = as_coefficients(coeffs)
    if c.n != d:
        raise ContractError(f"square construction needs n == d, got n={c.n}, d={d}")
    return _placement(np.eye(d), ranges)


def augmentation_vector(coeffs, d, signs=None):
    """``x_j = s_j sqrt(sum c_i^2 / d - c_j^2)``, the column completing ``Phi`` to a scaled orthogonal matrix."""
    c = as_coefficients(coeffs)
    if c.n != d + 1:
        raise ContractError(f"augmentation needs n == d + 1, got n={c.n}, d={d}")
    if not is_regular(c, d):
        raise InfeasibleError("weights are irregular: sum c_i^2 / d - c_j^2 is negative for some j")
    s = np.ones(c.n) if signs is None else np.asarray(signs, dtype=float).reshape(-1)
    if s.shape != (c.n,) or not np.all(np.isin(s, (-1.0, 1.0))):
        raise ContractError("signs must be n values in {+1, -1}")
    rad = c.total / d - c.squared
    return s * np.sqrt(np.clip(rad, 0.0, None))


def construct_dplus1(coeffs, d, signs=None, ranges=None):
    """The unique (up to equivalence) tight placement with ``n == d + 1``.

    An orthonormal basis of the complement of the augmentation vector is
    read off its full SVD; scaled by ``sqrt(sum c_i^2 / d)`` it gives the
    weighted bearing matrix ``Phi`` whose columns divided by ``c_i`` are the
    bearings.
    """
    c = as_coefficients(coeffs)
    x = augmentation_vector(c, d, signs)
    u, _, _ = np.linalg.svd(x[:, None], full_matrices=True)
    u = sign_canonical(u, axis=1)
    phi = np.sqrt(c.total / d) * u[:, 1:].T
    return _placement((phi / c.values).T, ranges)


def construct_3d_five(coeffs, ranges=None):
    """Tight 3D placement of five sensors lifted from a 2D tight placement.

    The dual weights ``sqrt(sum c_i^2 / 3 - c_j^2)`` get a 2D tight
    placement ``Phi'``; ``Phi`` spans the orthogonal complement of the rows
    of ``Phi'``.
    """
    c = as_coefficients(coeffs)
    if c.n != 5:
        raise ContractError(f"five-sensor lift needs n == 5, got {c.n}")
    if not is_regular(c, 3):
        raise InfeasibleError("weights are irregular with respect to d = 3")
    level = c.total / 3.0
    dual2 = np.clip(level - c.squared, 0.0, None)
    if np.max(dual2) > 0.5 * np.sum(dual2) * (1 + 1e-12):
        raise ConstructionFailure(f"dual weights {np.sqrt(dual2)} are not regular in 2D")
    phi_dual = (np.sqrt(dual2)[:, None] * _tight_2d(dual2)).T
    _, _, vt = np.linalg.svd(phi_dual, full_matrices=True)
    basis = sign_canonical(vt[2:], axis=0)
    phi = np.sqrt(level) * basis
    return _placement((phi / c.values).T, ranges)


# -- irregular ----------------------------------------------------------------------

def construct_irregular(coeffs, d, ranges=None):
    """Dominant sensors on the leading axes, the rest tight in the complement."""
    c = as_coefficients(coeffs)
    report = irregularity(c, d)
    if report.k0 == 0:
        raise ContractError("weights are regular; use a regular constructor")
    k0 = report.k0
    g = np.zeros((c.n, d))
    for axis, i in enumerate(report.dominant):
        g[i, axis] = 1.0
    res = np.array(report.residual)
    if d - k0 == 1:
        g[res, d - 1] = 1.0
    else:
        g[np.ix_(res, [k0, k0 + 1])] = _tight_2d(c.squared[res])
    return _placement(g, ranges)


# -- distributed ------------------------------------------------------------------------

def union_placements(parts, tol=None):
    """Concatenate tight sub-placements into one tight placement.

    Parameters
    ----------
    parts : sequence of (Placement, coefficients)
    tol : float, optional
        Allowed Frobenius residual of each part's frame operator from a
        multiple of the identity; scaled from the part's mass by default.
    """
    parts = list(parts)
    if not parts:
        raise ContractError("nothing to unite")
    d = parts[0][0].d
    rel, target = [], parts[0][0].target
    for idx, (pl, coeffs) in enumerate(parts):
        c = as_coefficients(coeffs)
        if pl.d != d:
            raise ContractError(f"part {idx} has dimension {pl.d}, expected {d}")
        if c.n != pl.n:
            raise ContractError(f"part {idx}: one coefficient per sensor is required")
        part_tol = _certify_tol(c.squared) if tol is None else tol
        residual = _regular_residual(c.squared, pl.bearings)
        if residual > part_tol:
            raise PreconditionViolation(
                f"part {idx} is not a tight (regular optimal) placement: residual {residual:.3g}",
                index=idx)
        rel.append(pl.relative)
    return Placement(np.vstack(rel), target)


def regular_polygon(n, phase=0.0):
    """Bearings to the vertices of a regular n-gon, shape (n, 2)."""
    a = phase + 2.0 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(a), np.sin(a)])


def _normalize_rows(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def platonic_solid(name):
    """Unit bearings to the vertices of a Platonic solid centred on the target."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    name = name.lower()
    if name == "tetrahedron":
        v = [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]]
    elif name == "octahedron":
        v = np.vstack([np.eye(3), -np.eye(3)])
    elif name in ("hexahedron", "cube"):
        v = [[a, b, c] for a in (1, -1) for b in (1, -1) for c in (1, -1)]
    elif name == "icosahedron":
        v = []
        for a in (1, -1):
            for b in (phi, -phi):
                v += [[0, a, b], [a, b, 0], [b, 0, a]]
    elif name == "dodecahedron":
        v = [[a, b, c] for a in (1, -1) for b in (1, -1) for c in (1, -1)]
        for a in (1, -1):
            for b in (1, -1):
                v += [[0, a / phi, b * phi], [a / phi, b * phi, 0], [b * phi, 0, a / phi]]
    else:
        raise ContractError(f"unknown Platonic solid {name!r}")
    return _normalize_rows(v)


PLATONIC_SOLIDS = ("tetrahedron", "octahedron", "hexahedron", "icosahedron", "dodecahedron")


def partition_regular_3d(coeffs):
    """Greedy split of weights into disjoint groups of 3-5 sensors, each regular in 3D.

    The heaviest remaining sensor is grouped with the lightest ones, using
    the smallest group size that is regular and leaves a remainder that
    could still be split.  Returns lists of original indices, or ``None``
    when the heuristic fails (which can happen for feasible inputs).
    """
    c = as_coefficients(coeffs)
    remaining = [int(i) for i in c.sort_order]
    groups = []
    while remaining:
        if 3 <= len(remaining) <= 5 and is_regular(c.subset(remaining), 3):
            groups.append(remaining)
            break
        for size in (3, 4, 5):
            left = len(remaining) - size
            if left < 0 or 0 < left < 3:
                continue
            group = [remaining[0]] + remaining[len(remaining) - (size - 1):]
            if is_regular(c.subset(group), 3):
                groups.append(group)
                taken = set(group)
                remaining = [i for i in remaining if i not in taken]
                break
        else:
            return None
    return groups


# -- dispatcher ------------------------------------------------------------------------

@dataclass(frozen=True)
class ConstructionResult:
    placement: Placement
    method: str
    certificate: OptimalityCertificate
    groups: Optional[list] = None


METHODS = ("auto", "irregular", "square", "2d", "dplus1", "five", "partition", "flow")


def _flow_construct(c, d, seed, attempts=8):
    from .flow import FlowConfig, integrate

    c2 = c.squared / (c.total / d)
    config = FlowConfig(dt=1e-2, t_end=400.0, convergence_tol=1e-24,
                        stall_threshold=1e-14, max_restarts=3, record_every=10 ** 6,
                        seed=seed)
    tol = _certify_tol(c2)
    for attempt in range(attempts):
        rng = np.random.default_rng(seed + attempt)
        traj = integrate(random_unit_vectors(c.n, d, rng), c2, config)
        g = traj.final.bearings
        cert = certify_bearings(np.sqrt(c2), g, tol)
        if cert.verdict:
            return g
        logger.info("flow attempt %d ended %s with residual %.3g",
                    attempt, traj.outcome.value, cert.residual)
    raise ConstructionFailure(f"gradient-flow construction did not certify after {attempts} attempts")


def construct_detailed(coeffs, d, ranges=None, method="auto", seed=0):
    """Build an optimal placement and report how it was obtained.

    ``method='auto'`` dispatches on the weights: irregular, then ``n == d``,
    then 2D, then ``n == d + 1``, then five sensors in 3D, then a regular
    partition for larger 3D networks with a gradient-flow fallback.  Every
    result is certified before it is returned.
    """
    c = as_coefficients(coeffs)
    if d not in (2, 3):
        raise ContractError(f"d must be 2 or 3, got {d}")
    if c.n < d:
        raise ContractError(f"need n >= d sensors, got n={c.n}, d={d}")
    if method not in METHODS:
        raise ContractError(f"unknown construction method {method!r}")
    groups = None

    if method == "auto":
        if irregularity(c, d).k0 > 0:
            method = "irregular"
        elif c.n == d:
            method = "square"
        elif d == 2:
            method = "2d"
        elif c.n == d + 1:
            method = "dplus1"
        elif c.n == 5:
            method = "five"
        else:
            method = "partition"

    if method == "irregular":
        g = construct_irregular(c, d).bearings
    elif method == "square":
        g = construct_square(c, d).bearings
    elif method == "2d":
        if d != 2:
            raise ContractError("the 2D construction needs d = 2")
        g = construct_2d(c).bearings
    elif method == "dplus1":
        g = construct_dplus1(c, d).bearings
    elif method == "five":
        if d != 3:
            raise ContractError("the five-sensor lift needs d = 3")
        g = construct_3d_five(c).bearings
    elif method == "partition":
        if d != 3:
            raise ContractError("partitioned construction needs d = 3")
        if not is_regular(c, 3):
            raise InfeasibleError("weights are irregular with respect to d = 3")
        groups = partition_regular_3d(c)
        if groups is None:
            logger.info("no regular partition found; falling back to gradient flow")
            method = "flow"
        else:
            g = np.zeros((c.n, 3))
            for grp in groups:
                sub = c.subset(grp)
                g[grp] = construct_detailed(sub, 3, method="auto", seed=seed).placement.bearings
    if method == "flow":
        if irregularity(c, d).k0 > 0:
            raise InfeasibleError("flow construction targets regular weights only")
        g = _flow_construct(c, d, seed)

    cert = certify_bearings(c, g, _certify_tol(c.squared))
    if not cert.verdict:
        raise ConstructionFailure(
            f"{method} construction failed to certify: regime {cert.regime.value}, "
            f"residual {cert.residual:.3g}, error {cert.error:.3g}")
    return ConstructionResult(_placement(g, ranges), method, cert, groups)


def construct(coeffs, d, ranges=None, method="auto", seed=0):
    """Certified optimal placement for the given weights (see :func:`construct_detailed`)."""
    return construct_detailed(coeffs, d, ranges, method, seed).placement
