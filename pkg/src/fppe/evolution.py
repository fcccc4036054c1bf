"""Time integration of the Galerkin system ``(W + D) a' = -D a + F(a)``.

``W`` is the singular-weight Gram matrix, ``D = diag(lambda_i^s)`` and
``F_i(a) = int |u|^{p-2} u e_i dx``.  The linear part is implicit, the
nonlinear load explicit, so each step is a single SPD solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .domain import Discretization, DomainSpec, QuadratureRule, SpectralField
from .errors import ConfigError, StepError
from .functionals import FunctionalSnapshot, snapshot_from_coeffs

SCHEMES = ("imex_euler", "imex_cn")


@dataclass(frozen=True)
class EvolutionConfig:
    scheme: str = "imex_cn"
    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    energy_drift_tol: float = 1e-9
    t_end: float = 5.0
    blowup_factor: float = 1e8
    snapshot_stride: int = 1
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise ConfigError("time steps must satisfy 0 < dt_min <= dt_init <= dt_max")
        if not self.blowup_factor > 1:
            raise ConfigError("blowup_factor must exceed 1")
        if not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.energy_drift_tol <= 0:
            raise ConfigError("energy_drift_tol must be positive")
        if int(self.snapshot_stride) != self.snapshot_stride or self.snapshot_stride < 1:
            raise ConfigError("snapshot_stride must be a positive integer")


@dataclass(frozen=True)
class Outcome:
    kind: str  # ReachedTEnd | BlowUpDetected | StepFailure
    t_stop: float
    T_star: float | None = None
    T_star_reliable: bool | None = None
    reason: str | None = None


@dataclass
class TrajectoryRecord:
    snapshots: list[FunctionalSnapshot] = field(default_factory=list)
    dissipation: list[float] = field(default_factory=list)  # aligned with snapshots
    step_sizes: list[float] = field(default_factory=list)  # dt that produced each snapshot
    dt_history: list[float] = field(default_factory=list)  # every accepted step
    outcome: Outcome | None = None
    final_coeffs: np.ndarray | None = None

    @property
    def cumulative_dissipation(self) -> float:
        return self.dissipation[-1] if self.dissipation else 0.0

    def column(self, name: str) -> np.ndarray:
        if name == "two_S":
            return np.array([2.0 * s.S for s in self.snapshots])
        return np.array([getattr(s, name) for s in self.snapshots])


class Operators:
    """``W``, ``D`` and the nonlinear evaluator with a cached factorization.

    ``nonlinear=False`` switches the load off (linear test mode).
    """

    def __init__(self, disc: Discretization, nonlinear: bool = True):
        # with nonlinear=False the step gate monitors the quadratic energy instead of J
        self.disc = disc
        self.W = disc.W
        self.D = disc.D
        self.M = self.W + np.diag(self.D)
        self.nonlinear = nonlinear
        self._factor_key = None
        self._factor = None
        self._mass_factor = None

    def load(self, a: np.ndarray) -> np.ndarray:
        if not self.nonlinear:
            return np.zeros_like(a)
        return self.disc.nonlinear_load(a)

    def factor(self, theta_dt: float):
        if self._factor_key != theta_dt:
            try:
                self._factor = scipy.linalg.cho_factor(self.M + theta_dt * np.diag(self.D))
            except np.linalg.LinAlgError as exc:
                raise StepError(f"step matrix is not positive definite: {exc}") from exc
            self._factor_key = theta_dt
        return self._factor

    def rate(self, a: np.ndarray) -> np.ndarray:
        """``a' = M^{-1}(-D a + F(a))``."""
        if self._mass_factor is None:
            self._mass_factor = scipy.linalg.cho_factor(self.M)
        return scipy.linalg.cho_solve(self._mass_factor, -self.D * a + self.load(a))

    def dissipation_rate(self, v: np.ndarray) -> float:
        """``int u_t^2 |x|^{-2s} + ||(-Delta)^{s/2} u_t||^2`` for ``u_t = sum v_i e_i``."""
        return float(v @ self.M @ v)


def step(a: np.ndarray, dt: float, scheme: str, ops: Operators,
         previous: tuple[np.ndarray, float] | None = None) -> np.ndarray:
    """Advance the coefficients by one step.

    ``imex_euler``: ``(M + dt D) a+ = M a + dt F(a)``.
    ``imex_cn``: ``(M + dt/2 D) a+ = (M - dt/2 D) a + dt F(a_half)`` where
    ``a_half`` extrapolates from ``previous = (a_prev, dt_prev)``, or comes
    from an explicit half step when there is no history.
    """
    if not dt > 0:
        raise StepError(f"dt must be positive, got {dt!r}")
    a = np.asarray(a, dtype=float)
    if scheme == "imex_euler":
        rhs = ops.M @ a + dt * ops.load(a)
        new = scipy.linalg.cho_solve(ops.factor(dt), rhs)
    elif scheme == "imex_cn":
        if previous is None:
            a_half = a + 0.5 * dt * ops.rate(a)
        else:
            a_prev, dt_prev = previous
            a_half = a + (0.5 * dt / dt_prev) * (a - a_prev)
        rhs = ops.M @ a - 0.5 * dt * (ops.D * a) + dt * ops.load(a_half)
        new = scipy.linalg.cho_solve(ops.factor(0.5 * dt), rhs)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    if not np.all(np.isfinite(new)):
        raise StepError("non-finite coefficients after step")
    return new


def simulate(u0: SpectralField, cfg: EvolutionConfig, domain: DomainSpec,
             rule: QuadratureRule | None = None, *,
             disc: Discretization | None = None, ops: Operators | None = None) -> TrajectoryRecord:
    """Integrate from ``u0`` until ``t_end``, blow-up, or step failure.

    The step size halves when the per-step energy-identity residual
    ``|J(a+) - J(a) + dt v^T M v|`` (relative to ``max(1, |J|)``, with
    ``v = (a+ - a)/dt``) exceeds ``energy_drift_tol``, when 2S more than
    doubles, or when the step breaks down; it grows by 1.2x after every ten
    accepted steps.  Besides every ``snapshot_stride``-th step, a snapshot is
    taken whenever 2S has grown by 1.5x since the previous one, which keeps
    the blow-up tail resolved.
    """
    if ops is None:
        disc = Discretization(domain, rule) if disc is None else disc
        ops = Operators(disc)
    disc = ops.disc
    a = np.array(u0.coeffs, dtype=float)
    rec = TrajectoryRecord()
    snap = snapshot_from_coeffs(a, 0.0, disc)
    rec.snapshots.append(snap)
    rec.dissipation.append(0.0)
    rec.step_sizes.append(0.0)
    two_S = snap.two_S
    J = snap.J if ops.nonlinear else 0.5 * snap.seminorm_sq
    blowup_level = cfg.blowup_factor * max(two_S, 1.0)
    t, dt, diss = 0.0, cfg.dt_init, 0.0
    previous = None
    accepted = 0
    last_snap_two_S = two_S
    since_snap = 0

    if not a.any():
        rec.outcome = Outcome("ReachedTEnd", 0.0)
        rec.snapshots.append(snapshot_from_coeffs(a, cfg.t_end, disc))
        rec.dissipation.append(0.0)
        rec.step_sizes.append(cfg.t_end)
        rec.dt_history.append(cfg.t_end)
        rec.final_coeffs = a
        return rec

    while True:
        remaining = cfg.t_end - t
        h = remaining if remaining <= dt * (1.0 + 1e-9) else dt
        try:
            new = step(a, h, cfg.scheme, ops, previous)
            ok = True
        except StepError:
            ok = False
        if ok:
            v = (new - a) / h
            inc = h * ops.dissipation_rate(v)
            semi = disc.seminorm_sq(new)
            lpp = disc.lp_power(new) if ops.nonlinear else 0.0
            J_new = 0.5 * semi - lpp / disc.p
            two_S_new = disc.singular_mass(new) + semi
            resid = abs(J_new - J + inc) / max(1.0, abs(J))
            ok = (math.isfinite(J_new) and math.isfinite(two_S_new)
                  and resid <= cfg.energy_drift_tol and two_S_new <= 2.0 * two_S)
        if not ok:
            dt = 0.5 * h
            if dt < cfg.dt_min:
                rec.outcome = Outcome("StepFailure", t, reason=f"dt fell below dt_min={cfg.dt_min!r}")
                if len(rec.snapshots) == 1 or rec.snapshots[-1].t != t:
                    rec.snapshots.append(snapshot_from_coeffs(a, t, disc))
                    rec.dissipation.append(diss)
                    rec.step_sizes.append(rec.dt_history[-1] if rec.dt_history else 0.0)
                break
            continue

        previous = (a, h)
        a, J, two_S = new, J_new, two_S_new
        t = cfg.t_end if h == remaining else t + h
        diss += inc
        rec.dt_history.append(h)
        accepted += 1
        since_snap += 1
        if accepted % 10 == 0:
            dt = min(1.2 * dt, cfg.dt_max)
        if h == remaining:
            dt = max(dt, h)

        done_end = t >= cfg.t_end
        done_blow = two_S >= blowup_level
        if (since_snap >= cfg.snapshot_stride or two_S >= 1.5 * last_snap_two_S
                or done_end or done_blow):
            rec.snapshots.append(snapshot_from_coeffs(a, t, disc))
            rec.dissipation.append(diss)
            rec.step_sizes.append(h)
            last_snap_two_S = two_S
            since_snap = 0
        if done_blow:
            est = estimate_blowup_time(rec)
            rec.outcome = Outcome("BlowUpDetected", t, est.T_star, est.reliable)
            break
        if done_end:
            rec.outcome = Outcome("ReachedTEnd", t)
            break
        if accepted >= cfg.max_steps:
            rec.outcome = Outcome("StepFailure", t, reason="max_steps exhausted")
            break
    rec.final_coeffs = a
    return rec


def energy_residual(record: TrajectoryRecord, J0: float) -> float:
    """``max_t |dissipation(t) + J(u(t)) - J0|`` over the snapshots."""
    if not record.snapshots:
        raise ValueError("empty trajectory")
    J = record.column("J")
    diss = np.asarray(record.dissipation)
    return float(np.max(np.abs(diss + J - J0)))


def dSdt_check(record: TrajectoryRecord) -> float:
    """Max normalized deviation of ``d(2S)/dt`` from ``-2I`` at interior snapshots.

    Uses the three-point (non-uniform) central difference.
    """
    if len(record.snapshots) < 3:
        raise ValueError("dSdt_check needs at least 3 snapshots")
    t = record.column("t")
    y = record.column("two_S")
    I = record.column("I")
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    deriv = (-(h1 / (h0 * (h0 + h1))) * y[:-2]
             + ((h1 - h0) / (h0 * h1)) * y[1:-1]
             + (h0 / (h1 * (h0 + h1))) * y[2:])
    target = -2.0 * I[1:-1]
    dev = np.abs(deriv - target) / np.maximum(np.abs(target), 1.0)
    return float(dev.max())


@dataclass(frozen=True)
class BlowupEstimate:
    T_star: float
    gamma: float
    residual: float
    reliable: bool


def _fit_line(t: np.ndarray, z: np.ndarray):
    A = np.column_stack([t, np.ones_like(t)])
    coef, *_ = np.linalg.lstsq(A, z, rcond=None)
    resid = z - A @ coef
    spread = np.sqrt(np.mean((z - z.mean()) ** 2))
    return coef, float(np.sqrt(np.mean(resid ** 2)) / spread) if spread > 0 else np.inf


def estimate_blowup_time(record: TrajectoryRecord, *, window: int = 16,
                         residual_threshold: float = 0.05) -> BlowupEstimate:
    """Extrapolate the blow-up time from the tail of ``2S(t)``.

    Fits ``z = (2S)^{-gamma}`` linearly in ``t`` over the last ``window``
    snapshots, choosing ``gamma`` in ``(0, 2]`` to minimize the relative fit
    residual; the root of the fitted line is ``T*``.  If the tail is not
    monotone, too short, or the fit is poor, ``reliable`` is False and
    ``T*`` is the last snapshot time.
    """
    from scipy.optimize import minimize_scalar

    t = record.column("t")
    y = record.column("two_S")
    t_stop = float(t[-1]) if t.size else 0.0
    n = min(window, t.size)
    if n < 8:
        return BlowupEstimate(t_stop, float("nan"), float("inf"), False)
    t, y = t[-n:], y[-n:]
    if np.any(np.diff(y) <= 0) or np.any(y <= 0):
        return BlowupEstimate(t_stop, float("nan"), float("inf"), False)
    logy = np.log(y)

    def score(g):
        return _fit_line(t, np.exp(-g * logy))[1]

    grid = np.linspace(0.02, 2.0, 100)
    scores = [score(g) for g in grid]
    k = int(np.argmin(scores))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(score, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    gamma = float(res.x) if res.fun <= scores[k] else float(grid[k])
    (slope, icpt), resid = _fit_line(t, np.exp(-gamma * logy))
    if not slope < 0:
        return BlowupEstimate(t_stop, gamma, resid, False)
    T_star = -icpt / slope
    reliable = resid <= residual_threshold and T_star >= t_stop
    if not reliable:
        return BlowupEstimate(t_stop, gamma, resid, False)
    return BlowupEstimate(float(T_star), gamma, resid, True)
