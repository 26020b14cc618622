"""Closed-form linear algebra for stacks of 2x2 and 3x3 symmetric matrices.

All functions accept arrays of shape ``(..., d, d)`` with ``d`` in {2, 3} and
broadcast over the leading axes, so the same kernels serve single placements
and large random batches.
"""

import numpy as np

from .errors import ContractError

#: Eigenvalues in [-NEG_CLAMP, 0) are treated as round-off and reported as 0.
NEG_CLAMP = 1e-12


def _check_square(a):
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2] or a.shape[-1] not in (2, 3):
        raise ContractError(f"expected (..., d, d) with d in {{2, 3}}, got {a.shape}")
    return a


def _eig2(a00, a11, a01):
    m = 0.5 * (a00 + a11)
    h = np.hypot(0.5 * (a00 - a11), a01)
    return m + h, m - h


def eigvalsh_sym(a):
    """Eigenvalues of symmetric 2x2 / 3x3 matrices, in descending order.

    The 2x2 case uses the quadratic formula in its cancellation-free
    ``mean +/- hypot`` form.  The 3x3 case takes only the best-separated
    root of the characteristic cubic from its trigonometric solution (the
    other two lose half their digits when nearly equal), then deflates: the
    matching eigenvector is a cross product of two rows of ``A - lambda I``
    and the remaining pair comes from the 2x2 compression of ``A`` onto its
    orthogonal complement.

    Parameters
    ----------
    a : array_like, shape (..., d, d)

    Returns
    -------
    ndarray, shape (..., d)
    """
    a = _check_square(a)
    d = a.shape[-1]
    if d == 2:
        return np.stack(_eig2(a[..., 0, 0], a[..., 1, 1], a[..., 0, 1]), axis=-1)

    q = np.trace(a, axis1=-2, axis2=-1) / 3.0
    p1 = a[..., 0, 1] ** 2 + a[..., 0, 2] ** 2 + a[..., 1, 2] ** 2
    p2 = ((a[..., 0, 0] - q) ** 2 + (a[..., 1, 1] - q) ** 2
          + (a[..., 2, 2] - q) ** 2 + 2.0 * p1)
    p = np.sqrt(p2 / 6.0)
    scalar = ~(p > 0.0)
    safe_p = np.where(scalar, 1.0, p)
    b = (a - q[..., None, None] * np.eye(3)) / safe_p[..., None, None]
    r = np.clip(0.5 * det_sym(b), -1.0, 1.0)
    phi = np.arccos(r) / 3.0
    top = phi < np.pi / 6.0
    iso = np.where(top, q + 2.0 * p * np.cos(phi),
                   q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0))

    m = a - iso[..., None, None] * np.eye(3)
    cands = np.stack([np.cross(m[..., 0, :], m[..., 1, :]),
                      np.cross(m[..., 0, :], m[..., 2, :]),
                      np.cross(m[..., 1, :], m[..., 2, :])], axis=-2)
    norms = np.linalg.norm(cands, axis=-1)
    best = np.argmax(norms, axis=-1)
    v = np.take_along_axis(cands, best[..., None, None], axis=-2)[..., 0, :]
    vn = np.take_along_axis(norms, best[..., None], axis=-1)[..., 0]
    v = v / np.where(vn > 0.0, vn, 1.0)[..., None]
    axis = np.argmin(np.abs(v), axis=-1)
    e = np.eye(3)[axis]
    u = e - np.sum(e * v, axis=-1)[..., None] * v
    u = u / np.linalg.norm(u, axis=-1)[..., None]
    w = np.cross(v, u)
    au = np.einsum("...ij,...j->...i", a, u)
    aw = np.einsum("...ij,...j->...i", a, w)
    hi, lo = _eig2(np.sum(u * au, axis=-1), np.sum(w * aw, axis=-1), np.sum(u * aw, axis=-1))

    ev = np.sort(np.stack([iso, hi, lo], axis=-1), axis=-1)[..., ::-1]
    return np.where(scalar[..., None], q[..., None], ev)


def clamp_psd(eigs):
    """Zero out tiny negative eigenvalues produced by round-off."""
    eigs = np.asarray(eigs, dtype=float)
    return np.where((eigs < 0.0) & (eigs >= -NEG_CLAMP), 0.0, eigs)


def det_sym(a):
    """Determinant of 2x2 / 3x3 matrices by cofactor expansion."""
    a = _check_square(a)
    if a.shape[-1] == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    return (a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
            - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
            + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0]))


def frobenius_sq(a):
    """Squared Frobenius norm over the last two axes."""
    a = np.asarray(a, dtype=float)
    return np.sum(a * a, axis=(-2, -1))


def deviation_from_scalar(a):
    """``||A - (tr A / d) I||^2`` evaluated on the centred matrix directly."""
    a = np.asarray(a, dtype=float)
    d = a.shape[-1]
    mean = np.trace(a, axis1=-2, axis2=-1) / d
    centred = a - mean[..., None, None] * np.eye(d)
    return frobenius_sq(centred)


def sign_canonical(vectors, axis=0):
    """Flip each vector so its first entry with magnitude above 1e-12 is positive.

    ``vectors`` holds one vector per slice along ``axis`` (columns by
    default).
    """
    v = np.array(vectors, dtype=float)
    moved = np.moveaxis(v, axis, -1)
    out = moved.copy()
    for j in range(moved.shape[-1]):
        col = moved[..., j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[..., j] = -col
    return np.moveaxis(out, -1, axis)
