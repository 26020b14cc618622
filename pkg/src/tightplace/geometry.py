"""Placements of sensors around a target and the equivalence between them.

A placement stores the target estimate ``p`` and the sensor positions
relative to it, ``r_i = s_i - p``.  Bearings ``g_i = r_i / ||r_i||`` and
ranges ``||r_i||`` are derived.  Two placements are *equivalent* when one
maps onto the other by relabelling sensors with equal weights, flipping
sensors through the target, and a global orthogonal transform.
"""

import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .coefficients import as_coefficients
from .errors import ContractError, DegenerateGeometryError, UnsupportedError

UNIT_TOL = 1e-12
EQUIVALENCE_TOL = 1e-6
MAX_EQUIVALENCE_N = 8
#: Sensors are interchangeable when their weights differ by at most this fraction of max(c).
TIE_TOL = 1e-9


def _row_norms(rows):
    """Overflow/underflow-safe Euclidean norm of each row."""
    rows = np.asarray(rows, dtype=float)
    scale = np.max(np.abs(rows), axis=-1)
    safe = np.where(scale > 0.0, scale, 1.0)
    return scale * np.linalg.norm(rows / safe[..., None], axis=-1)


def bearing_of(r):
    """Unit vector pointing from the target to a sensor at relative position ``r``."""
    r = np.asarray(r, dtype=float)
    norm = float(_row_norms(r))
    if not norm > 0.0 or not np.isfinite(norm):
        raise DegenerateGeometryError("sensor coincides with the target (zero relative position)")
    return r / norm


@dataclass(frozen=True, eq=False)
class Placement:
    """Target estimate plus sensor positions relative to it.

    Parameters
    ----------
    relative : array_like, shape (n, d)
        ``r_i = s_i - p`` for each sensor, ``d`` in {2, 3}.
    target : array_like, shape (d,), optional
        Target estimate ``p``; defaults to the origin.
    """

    relative: np.ndarray
    target: Optional[np.ndarray] = None

    def __post_init__(self):
        rel = np.array(self.relative, dtype=float)
        if rel.ndim != 2 or rel.shape[1] not in (2, 3) or rel.shape[0] < 1:
            raise ContractError(f"relative positions must have shape (n, 2|3), got {rel.shape}")
        if not np.all(np.isfinite(rel)):
            raise ContractError("relative positions must be finite")
        d = rel.shape[1]
        tgt = np.zeros(d) if self.target is None else np.array(self.target, dtype=float).reshape(-1)
        if tgt.shape != (d,) or not np.all(np.isfinite(tgt)):
            raise ContractError(f"target must be a finite length-{d} vector")
        ranges = _row_norms(rel)
        bad = np.flatnonzero(~(ranges > 0.0))
        if bad.size:
            raise DegenerateGeometryError(f"sensor {int(bad[0])} coincides with the target")
        bearings = rel / ranges[:, None]
        for arr in (rel, tgt, ranges, bearings):
            arr.setflags(write=False)
        object.__setattr__(self, "relative", rel)
        object.__setattr__(self, "target", tgt)
        object.__setattr__(self, "_ranges", ranges)
        object.__setattr__(self, "_bearings", bearings)

    @classmethod
    def from_positions(cls, positions, target=None):
        positions = np.asarray(positions, dtype=float)
        tgt = np.zeros(positions.shape[-1]) if target is None else np.asarray(target, dtype=float)
        return cls(positions - tgt, tgt)

    @classmethod
    def from_bearings(cls, bearings, ranges=None, target=None):
        g = np.asarray(bearings, dtype=float)
        r = np.ones(len(g)) if ranges is None else np.asarray(ranges, dtype=float).reshape(-1)
        if r.shape != (len(g),):
            raise ContractError("one range per bearing is required")
        return cls(g * r[:, None], target)

    @property
    def d(self):
        return self.relative.shape[1]

    @property
    def n(self):
        return self.relative.shape[0]

    @property
    def bearings(self):
        return self._bearings

    @property
    def ranges(self):
        return self._ranges

    @property
    def positions(self):
        return self.target + self.relative

    def with_ranges(self, ranges):
        return Placement.from_bearings(self.bearings, ranges, self.target)

    def __repr__(self):
        return f"Placement(n={self.n}, d={self.d}, target={self.target.tolist()})"


def check_orthogonal(U, d=None):
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or (d is not None and U.shape[0] != d):
        raise ContractError(f"orthogonal transform must be {d}x{d}, got {U.shape}")
    if np.max(np.abs(U.T @ U - np.eye(U.shape[0]))) > UNIT_TOL * 10:
        raise ContractError("transform is not orthogonal (U^T U != I)")
    return U


def transform_placement(pl, U, signs=None, perm=None):
    """Apply a global orthogonal map, per-sensor flips and a relabelling.

    Sensor ``i`` of ``pl`` becomes sensor ``perm[i]`` of the result with
    relative position ``signs[i] * U @ r_i``.  The target is unchanged.
    """
    n, d = pl.n, pl.d
    U = check_orthogonal(U, d)
    signs = np.ones(n) if signs is None else np.asarray(signs, dtype=float).reshape(-1)
    perm = np.arange(n) if perm is None else np.asarray(perm, dtype=int).reshape(-1)
    if signs.shape != (n,) or not np.all(np.isin(signs, (-1.0, 1.0))):
        raise ContractError("signs must be n values in {+1, -1}")
    if perm.shape != (n,) or sorted(perm.tolist()) != list(range(n)):
        raise ContractError("perm must be a permutation of 0..n-1")
    out = np.empty_like(pl.relative)
    out[perm] = signs[:, None] * (pl.relative @ U.T)
    return Placement(out, pl.target)


def procrustes_rotation(source, dest):
    """Orthogonal ``U`` minimising ``sum ||U a_i - b_i||^2`` over rows ``a_i``, ``b_i``.

    Reflections are allowed (the full orthogonal group).
    """
    m = np.asarray(dest, dtype=float).T @ np.asarray(source, dtype=float)
    w, _, vt = np.linalg.svd(m)
    return w @ vt


class Witness(NamedTuple):
    """Maps placement ``a`` onto ``b`` via ``transform_placement(a, U, signs, perm)``."""

    U: np.ndarray
    signs: np.ndarray
    perm: np.ndarray


def placements_equivalent(pl_a, pl_b, coeffs, tol=EQUIVALENCE_TOL):
    """Decide whether two placements are equivalent and return a witness.

    The search is exhaustive over sign patterns and relabellings among
    sensors with equal coefficients (within ``TIE_TOL * max(c)``).  Branches
    are pruned when a pairwise inner product already disagrees by more than
    any transform within ``tol`` could explain; each complete candidate is
    aligned by orthogonal Procrustes and accepted when every bearing lands
    within ``tol``.

    Returns
    -------
    (bool, Witness or None)
    """
    if pl_a.n != pl_b.n or pl_a.d != pl_b.d:
        raise ContractError("placements must have the same sensor count and dimension")
    n = pl_a.n
    if n > MAX_EQUIVALENCE_N:
        raise UnsupportedError(f"equivalence search supports n <= {MAX_EQUIVALENCE_N}, got {n}")
    c = as_coefficients(coeffs).values
    if c.size != n:
        raise ContractError("one coefficient per sensor is required")

    ga, gb = pl_a.bearings, pl_b.bearings
    ka, kb = ga @ ga.T, gb @ gb.T
    swappable = np.abs(c[:, None] - c[None, :]) <= TIE_TOL * c.max()
    gram_tol = 2.0 * tol + tol * tol + 1e-12

    assigned = [0] * n          # b-index -> a-index
    sign = np.ones(n)           # sign applied to the a-bearing sent to b-index
    used = [False] * n

    def leaf():
        src = sign[:, None] * ga[assigned]
        U = procrustes_rotation(src, gb)
        resid = np.linalg.norm(src @ U.T - gb, axis=1)
        if np.max(resid) <= tol:
            perm = np.empty(n, dtype=int)
            signs = np.empty(n)
            perm[assigned] = np.arange(n)
            signs[assigned] = sign
            return Witness(U, signs, perm)
        return None

    def search(i):
        if i == n:
            return leaf()
        for a in range(n):
            if used[a] or not swappable[a, i]:
                continue
            for s in ((1.0,) if i == 0 else (1.0, -1.0)):
                ok = True
                for j in range(i):
                    if abs(s * sign[j] * ka[a, assigned[j]] - kb[i, j]) > gram_tol:
                        ok = False
                        break
                if not ok:
                    continue
                used[a] = True
                assigned[i] = a
                sign[i] = s
                found = search(i + 1)
                used[a] = False
                if found is not None:
                    return found
        return None

    witness = search(0)
    return witness is not None, witness


def random_orthogonal(d, rng):
    """Haar-distributed orthogonal matrix (rotations and reflections)."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def random_unit_vectors(n, d, rng):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def all_sign_patterns(n):
    return [np.array(p, dtype=float) for p in itertools.product((1.0, -1.0), repeat=n)]
