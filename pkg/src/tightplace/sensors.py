"""Sensor measurement models, the Fisher information matrix and the frame operator.

Every sensor kind reduces to a positive weight ``c_i``; the objective that
all three kinds share is the frame potential ``||G||^2`` of the weighted
bearings, with ``G = sum_i c_i^2 g_i g_i^T``.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .coefficients import CoefficientSequence, as_coefficients
from .errors import ContractError, UnsupportedError
from .linalg import clamp_psd, det_sym, deviation_from_scalar, eigvalsh_sym, frobenius_sq


class SensorKind(enum.Enum):
    """The three supported sensor types and their measurement models."""

    BEARING_ONLY = "bearing"
    RANGE_ONLY = "range"
    RSS = "rss"

    @property
    def measurement_model(self):
        return {
            SensorKind.BEARING_ONLY: "h(r) = r / ||r||",
            SensorKind.RANGE_ONLY: "h(r) = ||r||",
            SensorKind.RSS: "h(r) = ln ||r||",
        }[self]

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower().replace("_", "-")
        aliases = {
            "bearing": cls.BEARING_ONLY, "bearing-only": cls.BEARING_ONLY,
            "range": cls.RANGE_ONLY, "range-only": cls.RANGE_ONLY,
            "rss": cls.RSS,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ContractError(f"unknown sensor kind {text!r}") from None


@dataclass(frozen=True)
class SensorSpec:
    """Sensor kind with its noise level and sensor-target range.

    ``range`` does not enter the coefficient of range-only sensors.
    """

    kind: SensorKind
    sigma: float
    range: float = 1.0

    def __post_init__(self):
        if not isinstance(self.kind, SensorKind):
            object.__setattr__(self, "kind", SensorKind.parse(self.kind))
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ContractError(f"sigma must be positive, got {self.sigma}")
        if not (np.isfinite(self.range) and self.range > 0):
            raise ContractError(f"range must be positive, got {self.range}")


def coefficient(spec):
    """Weight of one sensor: ``1/(sigma*range)`` for bearing-only and RSS, ``1/sigma`` for range-only."""
    if spec.kind is SensorKind.RANGE_ONLY:
        return 1.0 / spec.sigma
    return 1.0 / (spec.sigma * spec.range)


def coefficients_of(specs):
    return CoefficientSequence([coefficient(s) for s in specs])


def common_kind(specs):
    kinds = {s.kind for s in specs}
    if len(kinds) != 1:
        raise UnsupportedError("sensor networks with mixed sensor kinds are not supported")
    return kinds.pop()


def specs_for(placement, kind, sigma=1.0):
    """One spec per sensor of ``placement``, taking ranges from its geometry."""
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (placement.n,))
    return [SensorSpec(SensorKind.parse(kind) if isinstance(kind, str) else kind, float(s), float(r))
            for s, r in zip(sig, placement.ranges)]


# -- array kernels (broadcast over leading batch axes) -------------------------

def frame_matrix(c2, g):
    """``sum_i c2_i g_i g_i^T`` for ``c2`` of shape (..., n) and ``g`` of shape (..., n, d)."""
    return np.einsum("...i,...ij,...ik->...jk", np.asarray(c2, dtype=float), g, g)


def fim_matrix(kind, c2, g):
    gmat = frame_matrix(c2, g)
    if kind is SensorKind.BEARING_ONLY:
        d = gmat.shape[-1]
        return np.sum(c2, axis=-1)[..., None, None] * np.eye(d) - gmat
    return gmat


# -- value types ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FrameOperator:
    """Symmetric ``G`` with its eigenvalues (descending) and frame bounds."""

    matrix: np.ndarray
    eigenvalues: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        eig = clamp_psd(eigvalsh_sym(m))
        eig.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def d(self):
        return self.matrix.shape[0]

    @property
    def lower_frame_bound(self):
        return float(self.eigenvalues[-1])

    @property
    def upper_frame_bound(self):
        return float(self.eigenvalues[0])

    @property
    def mean_eigenvalue(self):
        return float(np.trace(self.matrix)) / self.d


@dataclass(frozen=True, eq=False)
class Fim:
    """Fisher information matrix with eigenvalues and their mean."""

    matrix: np.ndarray
    kind: SensorKind = SensorKind.RANGE_ONLY
    eigenvalues: np.ndarray = field(init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        eig = clamp_psd(eigvalsh_sym(m))
        eig.setflags(write=False)
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def d(self):
        return self.matrix.shape[0]

    @property
    def mean_eigenvalue(self):
        return float(np.trace(self.matrix)) / self.d


@dataclass(frozen=True)
class CriteriaReport:
    det_F: float
    lambda_bar_pow_d: float
    deviation: float


# -- operations -------------------------------------------------------------------

def _unit_bearings(bearings):
    g = np.asarray(bearings, dtype=float)
    if g.ndim != 2 or g.shape[1] not in (2, 3):
        raise ContractError(f"bearings must have shape (n, 2|3), got {g.shape}")
    if np.any(np.abs(np.linalg.norm(g, axis=1) - 1.0) > 1e-9):
        raise ContractError("bearings must be unit length")
    return g


def frame_operator(coeffs, bearings):
    """Frame operator ``G = sum_i c_i^2 g_i g_i^T``."""
    c = as_coefficients(coeffs)
    g = _unit_bearings(bearings)
    if len(c) != len(g):
        raise ContractError("one coefficient per bearing is required")
    return FrameOperator(frame_matrix(c.squared, g))


def fim(placement, specs):
    """Fisher information matrix of a single-kind sensor network."""
    if len(specs) != placement.n:
        raise ContractError("one sensor spec per sensor is required")
    kind = common_kind(specs)
    c2 = coefficients_of(specs).squared
    return Fim(fim_matrix(kind, c2, placement.bearings), kind)


def objective(G):
    """Frame potential ``||G||^2`` (squared Frobenius norm)."""
    m = G.matrix if isinstance(G, FrameOperator) else np.asarray(G, dtype=float)
    return float(frobenius_sq(m))


def criteria_report(F):
    """``det F``, its AM-GM ceiling ``lambda_bar^d`` and ``||F - lambda_bar I||^2``."""
    m = F.matrix if isinstance(F, Fim) else np.asarray(F, dtype=float)
    d = m.shape[-1]
    lam_bar = float(np.trace(m)) / d
    return CriteriaReport(
        det_F=float(det_sym(m)),
        lambda_bar_pow_d=lam_bar ** d,
        deviation=float(deviation_from_scalar(m)),
    )
