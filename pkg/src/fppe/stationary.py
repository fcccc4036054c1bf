"""Ground states of the stationary problem by Nehari-manifold minimization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import Discretization, DomainSpec, QuadratureRule, SpectralField


@dataclass(frozen=True)
class SolverConfig:
    starts: int = 8
    tol: float = 1e-8
    energy_tol: float = 1e-12
    max_iters: int = 100_000
    step: float = 1.0
    perturbation: float = 0.3
    seed: int = 42


@dataclass(frozen=True)
class GroundState:
    field: SpectralField
    J_value: float
    residual: float
    iterations: int
    converged: bool
    start_index: int = 0


def _nehari_scale(disc: Discretization, a: np.ndarray) -> float:
    semi = disc.seminorm_sq(a)
    lpp = disc.lp_power(a)
    if semi == 0.0 or lpp == 0.0:
        raise ValueError("cannot project the zero field onto the Nehari manifold")
    return (semi / lpp) ** (1.0 / (disc.p - 2.0))


def nehari_scaling(field: SpectralField, domain: DomainSpec, rule: QuadratureRule) -> float:
    """The factor ``lambda > 0`` with ``I(lambda * field) = 0``."""
    return _nehari_scale(Discretization(domain, rule), field.coeffs)


def nehari_project(field: SpectralField, domain: DomainSpec, rule: QuadratureRule) -> SpectralField:
    """Rescale a nonzero field onto the Nehari manifold."""
    if field.is_zero():
        raise ValueError("cannot project the zero field onto the Nehari manifold")
    return field * nehari_scaling(field, domain, rule)


def _residual(disc: Discretization, a: np.ndarray) -> float:
    r = disc.D * a - disc.nonlinear_load(a)
    return float(np.sqrt(r @ (r / disc.D)))


def stationary_residual(field: SpectralField, domain: DomainSpec, rule: QuadratureRule) -> float:
    """H^{-s} norm of ``J'(u)``: ``(sum r_i^2 lambda_i^{-s})^{1/2}``."""
    return _residual(Discretization(domain, rule), field.coeffs)


def _descend(disc: Discretization, start: np.ndarray, cfg: SolverConfig):
    D = disc.D
    a = start * _nehari_scale(disc, start)
    J = disc.energy(a)
    tau = cfg.step
    res = _residual(disc, a)
    for it in range(1, cfg.max_iters + 1):
        g = a - disc.nonlinear_load(a) / D
        while True:
            trial = a - tau * g
            if np.any(trial):
                trial = trial * _nehari_scale(disc, trial)
                J_trial = disc.energy(trial)
                if J_trial <= J + 1e-15 * abs(J):
                    break
            tau *= 0.5
            if tau < 1e-14:
                return a, J, res, it, False
        dJ = J - J_trial
        a, J = trial, J_trial
        res = _residual(disc, a)
        tau = min(2.0 * tau, cfg.step)
        if res < cfg.tol and dJ < cfg.energy_tol:
            return a, J, res, it, True
    return a, J, res, cfg.max_iters, False


def ground_state(domain: DomainSpec, rule: QuadratureRule | None = None,
                 solver_cfg: SolverConfig | None = None, *,
                 disc: Discretization | None = None) -> GroundState:
    """Minimize ``J`` on the Nehari manifold.

    Each iterate takes a ``diag(lambda^{-s})``-preconditioned gradient step on
    ``J`` and is rescaled back onto the manifold, so every iterate is
    feasible and its energy is an upper bound for the well depth.  Start 0 is
    ``e_1``; the others perturb it randomly.  The lowest converged energy
    wins (ties by start index) and is sign-normalized to ``a_1 >= 0``.
    """
    cfg = SolverConfig() if solver_cfg is None else solver_cfg
    disc = Discretization(domain, rule) if disc is None else disc
    N = domain.n_modes
    rng = np.random.default_rng(cfg.seed)
    envelope = 1.0 / np.arange(1, N + 1)
    best = None
    for k in range(cfg.starts):
        start = np.zeros(N)
        start[0] = 1.0
        if k:
            start = start + cfg.perturbation * rng.standard_normal(N) * envelope
        a, J, res, its, ok = _descend(disc, start, cfg)
        key = (not ok, J)
        if best is None or key < best[0]:
            best = (key, a, J, res, its, ok, k)
    _, a, J, res, its, ok, k = best
    if a[0] < 0:
        a = -a
    return GroundState(SpectralField(a), J, res, its, ok, k)
