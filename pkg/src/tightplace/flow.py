"""Gradient control of sensor placements.

Each sensor moves with ``dr_i/dt = -P_i G g_i`` where ``P_i = I - g_i g_i^T``.
The velocity is tangent to the sphere of radius ``||r_i||``, so ranges are
conserved and ``V = (||G||^2 - beta) / 4`` never increases.

With altitude targets the total potential ``||G||^2 + sum_i (e3.r_i - l_i)^2``
is descended instead, using the true gradient of ``||G||^2`` with respect to
``r_i``: ``(4 c_i^2 / ||r_i||) P_i G g_i``.  Ranges are then free to change.
"""

import enum
import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .coefficients import as_coefficients, irregularity
from .errors import ContractError, NumericalFailure, StepSizeError
from .geometry import Placement
from .optimality import lower_bound
from .sensors import coefficients_of

logger = logging.getLogger(__name__)


class Integrator(enum.Enum):
    EULER = "euler"
    RK4 = "rk4"

    @classmethod
    def parse(cls, text):
        key = str(text).strip().lower()
        aliases = {"euler": cls.EULER, "explicit-euler": cls.EULER, "rk4": cls.RK4,
                   "runge-kutta4": cls.RK4, "rungekutta4": cls.RK4}
        try:
            return aliases[key]
        except KeyError:
            raise ContractError(f"unknown integrator {text!r}") from None


class Outcome(enum.Enum):
    CONVERGED_OPTIMAL = "converged-optimal"
    CONVERGED_CRITICAL = "converged-critical"
    TIMED_OUT = "timed-out"


@dataclass(frozen=True)
class FlowConfig:
    """Integration and termination settings.

    ``stall_window`` consecutive steps with every sensor speed below
    ``stall_threshold`` while the error is above ``convergence_tol`` count as
    convergence to a non-optimal critical point.  Up to ``max_restarts``
    times the bearings are then nudged by ``restart_perturbation`` radians in
    seeded random tangent directions and integration continues.
    """

    dt: float = 1e-3
    t_end: float = 100.0
    integrator: Integrator = Integrator.RK4
    renormalize: bool = False
    convergence_tol: float = 1e-6
    stall_window: int = 100
    stall_threshold: float = 1e-10
    seed: int = 0
    altitude_targets: Optional[tuple] = None
    altitude_tol: float = 1e-4
    max_restarts: int = 3
    restart_perturbation: float = 1e-2
    record_every: int = 1

    def __post_init__(self):
        if not isinstance(self.integrator, Integrator):
            object.__setattr__(self, "integrator", Integrator.parse(self.integrator))
        if not (self.dt > 0 and self.t_end > 0 and self.dt < self.t_end):
            raise ContractError("need 0 < dt < t_end")
        if not self.convergence_tol > 0:
            raise ContractError("convergence_tol must be positive")
        if self.stall_window < 1 or self.record_every < 1 or self.max_restarts < 0:
            raise ContractError("stall_window and record_every must be >= 1, max_restarts >= 0")
        if self.altitude_targets is not None:
            object.__setattr__(self, "altitude_targets",
                               tuple(float(x) for x in self.altitude_targets))


class Sample(NamedTuple):
    t: float
    placement: Placement
    V: float
    optimality_error: float
    gradient_norms: np.ndarray


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Recorded states of one integration run (arrays indexed by sample)."""

    times: np.ndarray
    relative: np.ndarray
    target: np.ndarray
    V: np.ndarray
    error: np.ndarray
    gradient_norms: np.ndarray
    outcome: Outcome
    restarts: int = 0
    restart_times: tuple = ()

    def __len__(self):
        return self.times.size

    def placement(self, k):
        return Placement(self.relative[k], self.target)

    @property
    def final(self):
        return self.placement(-1)

    @property
    def samples(self):
        for k in range(len(self)):
            yield Sample(float(self.times[k]), self.placement(k), float(self.V[k]),
                         float(self.error[k]), self.gradient_norms[k])

    @property
    def ranges(self):
        return np.linalg.norm(self.relative, axis=-1)


# -- kernels (all accept a leading batch axis) ----------------------------------------

def _frame(R, c2):
    rn = np.sqrt(np.einsum("...ij,...ij->...i", R, R))
    g = R / rn[..., None]
    G = np.swapaxes(c2[:, None] * g, -1, -2) @ g
    return g, G, rn


def _tangent_drive(g, G):
    """``P_i G g_i`` for every sensor (rows)."""
    Gg = g @ G
    return Gg - np.einsum("...ij,...ij->...i", g, Gg)[..., None] * g


class _ErrorFunction:
    """Fast optimality error for fixed weights, matching ``optimality.certify``."""

    def __init__(self, c2, d):
        c2 = np.asarray(c2, dtype=float)
        n = c2.size
        self.c2 = c2
        self.d = d
        self.bound = lower_bound(np.sqrt(c2), d)
        report = irregularity(np.sqrt(c2), d)
        self.k0 = report.k0
        self.square = n == d
        self.mu_eye = np.sum(c2) / d * np.eye(d)
        self.w = np.outer(c2, c2)
        if self.square:
            self.w_off = self.w * (1.0 - np.eye(n))
        elif self.k0:
            dom = np.array(report.dominant)
            self.res = np.array(report.residual)
            touching = np.zeros((n, n))
            touching[dom, :] = 1.0
            touching[:, dom] = 1.0
            np.fill_diagonal(touching, 0.0)
            self.w_touch = self.w * touching
            self.tail = float(np.sum(c2[self.res]))

    def __call__(self, g, G):
        if self.square:
            gram = g @ np.swapaxes(g, -1, -2)
            err = np.sum(self.w_off * gram * gram, axis=(-2, -1))
        elif self.k0 == 0:
            centred = G - self.mu_eye
            err = np.sum(centred * centred, axis=(-2, -1))
        else:
            gram = g @ np.swapaxes(g, -1, -2)
            gr = g[..., self.res, :]
            G_res = np.swapaxes(self.c2[self.res][:, None] * gr, -1, -2) @ gr
            err = (np.sum(self.w_touch * gram * gram, axis=(-2, -1))
                   + np.sum(G_res * G_res, axis=(-2, -1)) - self.tail ** 2 / (self.d - self.k0))
        floor = -1e-9 * max(1.0, self.bound)
        return np.where((err >= floor) & (err < 0.0), 0.0, err)


def control_velocity(placement, coeffs):
    """Gradient control input ``-P_i G g_i`` for every sensor, shape (n, d)."""
    c2 = as_coefficients(coeffs).squared
    if c2.size != placement.n:
        raise ContractError("one coefficient per sensor is required")
    g = placement.bearings
    G = (c2[:, None] * g).T @ g
    return -_tangent_drive(g, G)


def frame_potential_gradient(placement, coeffs):
    """Gradient of ``||G||^2`` with respect to each ``r_i`` at fixed weights, shape (n, d)."""
    c2 = as_coefficients(coeffs).squared
    g = placement.bearings
    G = (c2[:, None] * g).T @ g
    return (4.0 * c2 / placement.ranges)[:, None] * _tangent_drive(g, G)


def altitude_potential_gradient(placement, altitude_targets):
    """Gradient of ``sum_i (e3.r_i - l_i)^2``; only the vertical component is nonzero."""
    if placement.d != 3:
        raise ContractError("altitude targets require d = 3")
    l = np.asarray(altitude_targets, dtype=float)
    grad = np.zeros_like(placement.relative)
    grad[:, 2] = 2.0 * (placement.relative[:, 2] - l)
    return grad


def lyapunov(placement, coeffs, d=None):
    """``(||G||^2 - beta) / 4`` where ``beta`` is the weights' lower bound."""
    c2 = as_coefficients(coeffs).squared
    d = placement.d if d is None else d
    if c2.size != placement.n:
        raise ContractError("one coefficient per sensor is required")
    g = placement.bearings
    G = (c2[:, None] * g).T @ g
    return 0.25 * float(_ErrorFunction(c2, d)(g, G))


# -- integration ----------------------------------------------------------------------

def _perturb(R, rng, angle):
    rn = np.linalg.norm(R, axis=1)
    g = R / rn[:, None]
    t = rng.standard_normal(R.shape)
    t -= np.einsum("ij,ij->i", t, g)[:, None] * g
    t /= np.linalg.norm(t, axis=1, keepdims=True)
    g_new = np.cos(angle) * g + np.sin(angle) * t
    return g_new * rn[:, None]


def integrate(relative, c2, config, target=None):
    """Integrate the flow from relative positions with fixed squared weights.

    This is the engine behind :func:`simulate`; it takes raw arrays so that
    constructors can reuse it without building sensor specs.
    """
    R = np.asarray(relative, dtype=float)
    return integrate_many(R[None], c2, config, target, seeds=[config.seed])[0]


def integrate_many(relatives, c2, config, target=None, seeds=None):
    """Integrate independent runs with shared weights in lockstep.

    ``relatives`` has shape (runs, n, d).  Each run terminates on its own and
    restarts with its own seeded generator, so results equal those of
    separate :func:`integrate` calls; batching only amortizes per-step
    overhead.  A step-size or numerical failure in any run aborts all.
    """
    X = np.array(relatives, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if X.ndim != 3:
        raise ContractError("relatives must have shape (runs, n, d)")
    B, n, d = X.shape
    target = np.zeros(d) if target is None else np.asarray(target, dtype=float)
    if c2.size != n:
        raise ContractError("one weight per sensor is required")
    for R in X:
        if np.any(np.linalg.norm(R, axis=1) == 0.0):
            Placement(R, target)  # raises DegenerateGeometryError
    seeds = [config.seed + k for k in range(B)] if seeds is None else list(seeds)
    if len(seeds) != B:
        raise ContractError("one seed per run is required")

    altitude = None
    if config.altitude_targets is not None:
        if d != 3:
            raise ContractError("altitude targets require d = 3")
        altitude = np.asarray(config.altitude_targets, dtype=float)
        if altitude.size != n:
            raise ContractError("one altitude target per sensor is required")

    errfun = _ErrorFunction(c2, d)
    with np.errstate(over="ignore"):
        r0 = np.linalg.norm(X, axis=2)
    rngs = [np.random.default_rng(s) for s in seeds]
    dt = config.dt
    tol = config.convergence_tol

    cw = c2[:, None]

    def drive(Y):
        # batched P_i G g_i on (runs, n, d) arrays, kept lean for the step loop
        rn = np.sqrt(np.add.reduce(Y * Y, 2))
        g = Y / rn[:, :, None]
        G = np.matmul((g * cw).transpose(0, 2, 1), g)
        Gg = np.matmul(g, G)
        return Gg - np.add.reduce(Gg * g, 2)[:, :, None] * g, g, G, rn

    if altitude is None:
        def velocity(Y):
            pg, g, G, _ = drive(Y)
            return -pg, g, G

        def potential(Y, G, err):
            return 0.25 * err
    else:
        def velocity(Y):
            pg, g, G, rn = drive(Y)
            v = -(4.0 * c2 / rn)[..., None] * pg
            v[..., 2] -= 2.0 * (Y[..., 2] - altitude)
            return v, g, G

        def potential(Y, G, err):
            return np.sum(G * G, axis=(-2, -1)) + np.sum((Y[..., 2] - altitude) ** 2, axis=-1)

    def converged(Y, err):
        ok = err <= tol
        if altitude is not None:
            ok &= np.max(np.abs(Y[..., 2] - altitude), axis=-1) <= config.altitude_tol
        return ok

    def speeds_of(v):
        return np.sqrt(np.add.reduce(v * v, -1))

    def evaluate(Y):
        v, g, G = velocity(Y)
        err = errfun(g, G)
        return v, err, potential(Y, G, err)

    # history blocks: (t, run indices, states, V, error, speeds)
    history = []

    def record(t, runs, Y, V, err, sp):
        history.append((t, runs, Y.copy(), np.array(V, dtype=float), np.array(err, dtype=float),
                        sp))

    def last_sample(run):
        for t, runs, Y, V, err, sp in reversed(history):
            hit = np.flatnonzero(runs == run)
            if hit.size:
                j = hit[0]
                return Sample(float(t), Placement(Y[j], target), float(V[j]), float(err[j]), sp[j])
        return None

    with np.errstate(over="ignore", invalid="ignore"):
        v, err, V = evaluate(X)
    idx = np.arange(B)
    record(0.0, idx, X, V, err, speeds_of(v))
    if not np.isfinite(V).all():
        run = int(np.flatnonzero(~np.isfinite(V))[0])
        raise NumericalFailure(f"non-finite initial state (run {run})", last_sample=last_sample(run))
    outcome = [Outcome.TIMED_OUT] * B
    restarts = np.zeros(B, dtype=int)
    restart_times = [[] for _ in range(B)]
    done0 = converged(X, err)
    for b in np.flatnonzero(done0):
        outcome[b] = Outcome.CONVERGED_OPTIMAL
    keep = ~done0
    idx, X, v, err, V = idx[keep], X[keep], v[keep], err[keep], V[keep]
    stall = np.zeros(idx.size, dtype=int)
    r0a = r0[keep]

    n_steps = int(np.ceil(config.t_end / dt - 1e-9))
    for step in range(1, n_steps + 1):
        if idx.size == 0:
            break
        if config.integrator is Integrator.EULER:
            X_new = X + dt * v
        else:
            k2 = velocity(X + 0.5 * dt * v)[0]
            k3 = velocity(X + 0.5 * dt * k2)[0]
            k4 = velocity(X + dt * k3)[0]
            X_new = X + (dt / 6.0) * (v + 2.0 * k2 + 2.0 * k3 + k4)
        if config.renormalize and altitude is None:
            X_new *= (r0a / np.linalg.norm(X_new, axis=2))[..., None]
        t = step * dt

        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            v_new, err_new, V_new = evaluate(X_new)
        if not np.isfinite(V_new).all():
            run = idx[np.flatnonzero(~np.isfinite(V_new))[0]]
            raise NumericalFailure(f"non-finite or degenerate state at t={t:g} (run {run})",
                                   last_sample=last_sample(run))
        rise = V_new > V + 1e-9 * np.maximum(1.0, V)
        if rise.any():
            j = np.flatnonzero(rise)[0]
            raise StepSizeError(
                f"potential increased from {V[j]:.6g} to {V_new[j]:.6g} at t={t:g}; "
                f"reduce dt (currently {dt:g})", last_sample=last_sample(idx[j]))
        X, v, err, V = X_new, v_new, err_new, V_new

        done = converged(X, err)
        sp = speeds_of(v)
        slow = sp.max(axis=1) < config.stall_threshold
        if slow.any():
            stall = np.where(~done & slow, stall + 1, 0)
            critical = stall >= config.stall_window
        else:
            stall[:] = 0
            critical = slow

        if step % config.record_every == 0 or step == n_steps:
            record(t, idx, X, V, err, sp)
        elif done.any() or critical.any():
            flag = done | critical
            record(t, idx[flag], X[flag], V[flag], err[flag], sp[flag])

        if not (done.any() or critical.any()):
            continue
        finished = done.copy()
        for j in np.flatnonzero(done):
            outcome[idx[j]] = Outcome.CONVERGED_OPTIMAL
        for j in np.flatnonzero(critical):
            b = idx[j]
            if restarts[b] >= config.max_restarts:
                outcome[b] = Outcome.CONVERGED_CRITICAL
                finished[j] = True
                continue
            restarts[b] += 1
            restart_times[b].append(t)
            logger.info("run %d stalled at a critical point (error %.3g) at t=%g; restart %d",
                        b, err[j], t, restarts[b])
            X[j] = _perturb(X[j], rngs[b], config.restart_perturbation)
            vj, ej, Vj = evaluate(X[j:j + 1])
            v[j], err[j], V[j] = vj[0], ej[0], Vj[0]
            stall[j] = 0
        if finished.any():
            keep = ~finished
            idx, X, v, err, V, stall, r0a = (idx[keep], X[keep], v[keep], err[keep], V[keep],
                                             stall[keep], r0a[keep])

    times = np.concatenate([np.full(runs.size, t) for t, runs, *_ in history])
    runs_all = np.concatenate([h[1] for h in history])
    states = np.concatenate([h[2] for h in history])
    Vs = np.concatenate([h[3] for h in history])
    errs = np.concatenate([h[4] for h in history])
    sp = np.concatenate([h[5] for h in history])
    out = []
    for b in range(B):
        m = runs_all == b
        out.append(Trajectory(
            times=times[m], relative=states[m], target=target, V=Vs[m], error=errs[m],
            gradient_norms=sp[m], outcome=outcome[b], restarts=int(restarts[b]),
            restart_times=tuple(restart_times[b])))
    return out


def simulate(initial, specs, config=None):
    """Integrate the gradient control law from ``initial``.

    Weights come from ``specs`` and stay fixed during the run.

    Raises
    ------
    StepSizeError
        The descended potential increased across a step.
    NumericalFailure
        The state became non-finite.
    """
    config = FlowConfig() if config is None else config
    if len(specs) != initial.n:
        raise ContractError("one sensor spec per sensor is required")
    c2 = coefficients_of(specs).squared
    return integrate(initial.relative, c2, config, initial.target)


@dataclass(frozen=True)
class Compatibility:
    compatible: bool
    note: str = ""
    state_index: Optional[int] = None
    sensor: Optional[int] = None
    state: Optional[Placement] = field(default=None, repr=False)


def check_compatibility(specs, config, states, tol=1e-9):
    """Check that the altitude potential never pushes orthogonally to a sensor's bearing.

    The frame-potential gradient is always orthogonal to ``r_i``; if the
    altitude gradient is too, the two can cancel away from an optimum.
    ``states`` is any iterable of placements, e.g. trajectory samples.
    """
    if config.altitude_targets is None:
        raise ContractError("compatibility is only defined with altitude targets")
    l = np.asarray(config.altitude_targets, dtype=float)
    if l.size != len(specs):
        raise ContractError("one altitude target per sensor is required")
    vacuous = False
    for k, state in enumerate(states):
        pl = state.placement if isinstance(state, Sample) else state
        grad = altitude_potential_gradient(pl, l)
        for i in range(pl.n):
            gnorm = np.linalg.norm(grad[i])
            if gnorm <= tol:
                vacuous = True
                continue
            cosine = abs(grad[i] @ pl.relative[i]) / (gnorm * pl.ranges[i])
            if cosine <= tol:
                return Compatibility(False, f"altitude gradient orthogonal to r_{i} in state {k}",
                                     k, i, pl)
    note = "altitude gradient vanished for some sensors (orthogonality vacuous)" if vacuous else ""
    return Compatibility(True, note)
