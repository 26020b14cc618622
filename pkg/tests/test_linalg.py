import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tightplace.errors import ContractError
from tightplace.linalg import (clamp_psd, det_sym, deviation_from_scalar, eigvalsh_sym,
                               frobenius_sq, sign_canonical)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


def _sym(a):
    return 0.5 * (a + a.T)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (3, 3), elements=finite))
def test_eigvalsh_3x3_matches_numpy(a):
    a = _sym(a)
    ours = eigvalsh_sym(a)
    ref = np.sort(np.linalg.eigvalsh(a))[::-1]
    scale = max(1.0, np.abs(a).max())
    assert np.allclose(ours, ref, atol=1e-9 * scale)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, (2, 2), elements=finite))
def test_eigvalsh_2x2_matches_numpy(a):
    a = _sym(a)
    ref = np.sort(np.linalg.eigvalsh(a))[::-1]
    assert np.allclose(eigvalsh_sym(a), ref, atol=1e-12 * max(1.0, np.abs(a).max()))


def test_eigvalsh_batched_and_sorted(rng):
    a = rng.standard_normal((50, 3, 3))
    a = a + np.swapaxes(a, 1, 2)
    ev = eigvalsh_sym(a)
    assert ev.shape == (50, 3)
    assert np.all(np.diff(ev, axis=1) <= 1e-12)
    assert np.allclose(ev, np.sort(np.linalg.eigvalsh(a), axis=1)[:, ::-1])


def test_eigvalsh_repeated_eigenvalues():
    assert np.allclose(eigvalsh_sym(4.0 * np.eye(3)), [4, 4, 4])
    assert np.allclose(eigvalsh_sym(np.diag([2.0, 2.0, 0.0])), [2, 2, 0])
    assert np.allclose(eigvalsh_sym(np.zeros((2, 2))), [0, 0])


def test_rejects_bad_shapes():
    with pytest.raises(ContractError):
        eigvalsh_sym(np.eye(4))
    with pytest.raises(ContractError):
        det_sym(np.ones(3))


def test_clamp_psd_only_touches_round_off():
    out = clamp_psd([1.0, -5e-13, -1e-6])
    assert out[1] == 0.0
    assert out[2] == -1e-6


def test_det_sym_matches_numpy(rng):
    a = rng.standard_normal((20, 3, 3))
    assert np.allclose(det_sym(a), np.linalg.det(a))
    b = rng.standard_normal((20, 2, 2))
    assert np.allclose(det_sym(b), np.linalg.det(b))


def test_deviation_identity(rng):
    # ||A - (trA/d) I||^2 = ||A||^2 - (trA)^2 / d
    a = rng.standard_normal((3, 3))
    a = a @ a.T
    expected = frobenius_sq(a) - np.trace(a) ** 2 / 3
    assert np.isclose(deviation_from_scalar(a), expected)
    assert deviation_from_scalar(5.0 * np.eye(2)) == 0.0


def test_sign_canonical_columns_and_rows():
    v = np.array([[0.0, -1.0], [-2.0, 3.0]])
    assert np.array_equal(sign_canonical(v), [[0.0, 1.0], [2.0, -3.0]])
    assert np.array_equal(sign_canonical(v, axis=1), [[0.0, 1.0], [2.0, -3.0]])
    assert np.array_equal(sign_canonical(v.T, axis=1), [[0.0, 2.0], [1.0, -3.0]])
