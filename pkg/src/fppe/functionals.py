"""Scalar functionals and variational constants of the truncated problem.

Every constant here is the value for the N-mode Galerkin space, not the
infinite-dimensional one, and carries the mode count with it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .domain import (
    Discretization,
    DomainSpec,
    QuadratureRule,
    SpectralField,
    WeightMatrix,
)
from .errors import ConvergenceError, CrossCheckError

CROSS_CHECK_TOL = 0.02


def _disc(domain: DomainSpec, rule: QuadratureRule | None = None) -> Discretization:
    return Discretization(domain, rule)


@dataclass(frozen=True)
class FunctionalSnapshot:
    t: float
    J: float
    I: float
    S: float
    L: float
    l2_norm: float
    lp_norm: float
    seminorm_sq: float
    singular_mass: float

    @property
    def two_S(self) -> float:
        return 2.0 * self.S


def snapshot_from_coeffs(a: np.ndarray, t: float, disc: Discretization) -> FunctionalSnapshot:
    """All functionals of ``u = sum a_i e_i`` at time ``t``."""
    semi = disc.seminorm_sq(a)
    lpp = disc.lp_power(a)
    mass = disc.singular_mass(a)
    J = 0.5 * semi - lpp / disc.p
    S = 0.5 * (mass + semi)
    return FunctionalSnapshot(
        t=float(t),
        J=J,
        I=semi - lpp,
        S=S,
        L=J + 2.0 * S,
        l2_norm=disc.l2_norm(a),
        lp_norm=lpp ** (1.0 / disc.p),
        seminorm_sq=semi,
        singular_mass=mass,
    )


def snapshot(field: SpectralField, t: float, disc: Discretization) -> FunctionalSnapshot:
    return snapshot_from_coeffs(field.coeffs, t, disc)


def seminorm_sq(field: SpectralField, domain: DomainSpec) -> float:
    """``||(-Delta)^{s/2} u||_2^2 = sum a_i^2 lambda_i^s``."""
    return float(np.sum(field.coeffs ** 2 * domain.eigenvalues() ** domain.s))


def singular_mass(field: SpectralField, W: WeightMatrix) -> float:
    """``int u^2 |x|^{-2s} dx = a^T W a``."""
    a = field.coeffs
    return float(a @ W.entries @ a)


def lp_norm(field: SpectralField, domain: DomainSpec, rule: QuadratureRule,
            r: float | None = None) -> float:
    """``||u||_r`` (``r`` defaults to ``p``) by quadrature on synthesized values."""
    r = domain.p if r is None else r
    return _disc(domain, rule).lp_power(field.coeffs, r) ** (1.0 / r)


def energy_J(field: SpectralField, domain: DomainSpec, rule: QuadratureRule) -> float:
    return _disc(domain, rule).energy(field.coeffs)


def nehari_I(field: SpectralField, domain: DomainSpec, rule: QuadratureRule) -> float:
    return _disc(domain, rule).nehari(field.coeffs)


# --------------------------------------------------------------------------
# Hardy constant


def hardy_constant(domain: DomainSpec, W: WeightMatrix) -> float:
    """Largest ``mu`` with ``W v = mu D v``, ``D = diag(lambda_i^s)``."""
    D = domain.eigenvalues() ** domain.s
    N = domain.n_modes
    try:
        mu = scipy.linalg.eigh(W.entries, np.diag(D), eigvals_only=True,
                               subset_by_index=[N - 1, N - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceError(f"generalized eigensolver failed: {exc}") from exc
    return float(mu[-1])


def hardy_rayleigh_ascent(domain: DomainSpec, W: WeightMatrix, *, starts: int = 20,
                          seed: int = 42, max_iters: int = 20000,
                          tol: float = 1e-15) -> float:
    """Maximize ``a^T W a / a^T D a`` by steepest ascent from random starts.

    Each iteration moves along the D-metric gradient with an exact line
    search (a 2x2 Rayleigh-Ritz problem on ``span{a, g}``).  Used as an
    eigensolver-free cross-check of :func:`hardy_constant`.
    """
    D = domain.eigenvalues() ** domain.s
    Wm = W.entries
    rng = np.random.default_rng(seed)
    best = -np.inf
    for _ in range(starts):
        a = rng.standard_normal(domain.n_modes)
        a /= np.sqrt(a @ (D * a))
        rho = a @ Wm @ a
        for _ in range(max_iters):
            g = (Wm @ a) / D - rho * a
            gn = np.sqrt(g @ (D * g))
            if gn < 1e-14:
                break
            g /= gn
            V = np.column_stack([a, g])
            A = V.T @ Wm @ V
            M = V.T @ (D[:, None] * V)
            vals, vecs = scipy.linalg.eigh(A, M)
            a = V @ vecs[:, -1]
            a /= np.sqrt(a @ (D * a))
            new = a @ Wm @ a
            done = abs(new - rho) <= tol * abs(new)
            rho = new
            if done:
                break
        best = max(best, rho)
    return float(best)


# --------------------------------------------------------------------------
# Embedding constant


@dataclass(frozen=True)
class RatioMaximum:
    value: float
    maximizer: np.ndarray
    iterations: int
    converged: bool
    start_index: int


def _maximize_ratio(disc: Discretization, r: float, start: np.ndarray, *,
                    tol: float, max_iters: int) -> tuple[float, np.ndarray, int, bool]:
    """Gradient ascent of ``||u||_r^r`` on the unit seminorm sphere, step halving."""
    D = disc.D
    a = start / np.sqrt(start @ (D * start))
    val = disc.lp_power(a, r)
    tau = 1.0
    for it in range(1, max_iters + 1):
        F = disc.nonlinear_load(a, r)
        # tangent D-metric gradient, scaled so tau = 1 is the fixed-point map
        g = (F / D) / (a @ F) - a
        gn = np.sqrt(g @ (D * g))
        if gn < 1e-12:
            return val, a, it, True
        while True:
            trial = a + tau * g
            trial /= np.sqrt(trial @ (D * trial))
            tval = disc.lp_power(trial, r)
            if tval >= val:
                break
            tau *= 0.5
            if tau < 1e-12:
                return val, a, it, False
        rel = (tval - val) / tval
        a, val = trial, tval
        tau = min(2.0 * tau, 1.0)
        if rel < tol:
            return val, a, it, True
    return val, a, max_iters, False


def maximize_embedding_ratio(domain: DomainSpec, rule: QuadratureRule | None = None, *,
                             r: float | None = None, starts: int = 20, seed: int = 42,
                             tol: float = 1e-13, max_iters: int = 20000,
                             disc: Discretization | None = None) -> RatioMaximum:
    """Multi-start maximization of ``||phi||_r / ||phi||_{H_0^s}``.

    Start 0 is ``e_1``; the remaining starts are Gaussian coefficient vectors
    with a ``1/i`` spectral envelope drawn from ``seed``.  The best value wins,
    ties going to the lowest start index.
    """
    disc = _disc(domain, rule) if disc is None else disc
    r = domain.p if r is None else r
    rng = np.random.default_rng(seed)
    N = domain.n_modes
    envelope = 1.0 / np.arange(1, N + 1)
    best = None
    for k in range(starts):
        if k == 0:
            start = np.zeros(N)
            start[0] = 1.0
        else:
            start = rng.standard_normal(N) * envelope
        val, a, its, ok = _maximize_ratio(disc, r, start, tol=tol, max_iters=max_iters)
        ratio = val ** (1.0 / r)
        if best is None or ratio > best.value:
            best = RatioMaximum(ratio, a, its, ok, k)
    if not best.converged:
        raise ConvergenceError(
            f"embedding ratio ascent did not converge after {best.iterations} iterations"
        )
    return best


def embedding_constant(domain: DomainSpec, rule: QuadratureRule | None = None, *,
                       r: float | None = None, starts: int = 20, seed: int = 42,
                       disc: Discretization | None = None) -> float:
    """Best constant ``C`` in ``||phi||_r <= C ||phi||_{H_0^s}`` on the truncated space."""
    return maximize_embedding_ratio(domain, rule, r=r, starts=starts, seed=seed,
                                    disc=disc).value


def depth_from_embedding(C: float, p: float) -> float:
    """``d = (p-2)/(2p) C^{2p/(2-p)}``."""
    return (p - 2.0) / (2.0 * p) * C ** (2.0 * p / (2.0 - p))


def embedding_from_depth(d: float, p: float) -> float:
    """Inverse of :func:`depth_from_embedding`."""
    return (2.0 * p * d / (p - 2.0)) ** ((2.0 - p) / (2.0 * p))


# --------------------------------------------------------------------------
# Well depth and the bundled constants


@dataclass(frozen=True)
class WellDepth:
    value: float  # ground-state route
    ground_state_route: float
    embedding_route: float
    relative_gap: float


def well_depth(domain: DomainSpec, rule: QuadratureRule | None = None, *,
               C: float | None = None, solver_cfg=None, seed: int = 42,
               disc: Discretization | None = None, tol: float = CROSS_CHECK_TOL) -> WellDepth:
    """Potential well depth from the Nehari ground state, cross-checked against ``C``."""
    from .stationary import SolverConfig, ground_state

    disc = _disc(domain, rule) if disc is None else disc
    cfg = SolverConfig(seed=seed) if solver_cfg is None else solver_cfg
    gs = ground_state(domain, disc.rule, cfg, disc=disc)
    if not gs.converged:
        raise ConvergenceError(
            f"ground-state solver failed (residual {gs.residual:.3e} after {gs.iterations} iterations)"
        )
    if C is None:
        C = embedding_constant(domain, disc=disc, seed=seed)
    d_b = depth_from_embedding(C, domain.p)
    gap = abs(gs.J_value - d_b) / gs.J_value
    if gap > tol:
        raise CrossCheckError(
            f"well depth routes disagree: ground state {gs.J_value!r} vs embedding {d_b!r}"
        )
    return WellDepth(gs.J_value, gs.J_value, d_b, gap)


@dataclass(frozen=True)
class WellConstants:
    hardy_C_star: float
    embedding_C: float
    depth_d: float
    alpha1: float
    n_modes: int
    embedding_C_from_depth: float = float("nan")
    depth_d_from_embedding: float = float("nan")
    tolerances: dict = field(default_factory=dict)
    methods: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "hardy_C_star": self.hardy_C_star,
            "embedding_C": self.embedding_C,
            "embedding_C_from_depth": self.embedding_C_from_depth,
            "depth_d": self.depth_d,
            "depth_d_from_embedding": self.depth_d_from_embedding,
            "alpha1": self.alpha1,
            "n_modes": self.n_modes,
            "tolerances": dict(self.tolerances),
            "methods": dict(self.methods),
        }


def well_constants(domain: DomainSpec, rule: QuadratureRule | None = None, *,
                   seed: int = 42, solver_cfg=None, disc: Discretization | None = None,
                   cross_check_tol: float = CROSS_CHECK_TOL) -> WellConstants:
    """Compute ``C*``, ``C``, ``d`` and ``alpha_1`` with both routes cross-checked."""
    disc = _disc(domain, rule) if disc is None else disc
    C_star = hardy_constant(domain, disc.weight)
    C = embedding_constant(domain, disc=disc, seed=seed)
    depth = well_depth(domain, disc=disc, C=C, solver_cfg=solver_cfg, seed=seed,
                       tol=cross_check_tol)
    C_from_d = embedding_from_depth(depth.value, domain.p)
    if abs(C_from_d - C) / C > cross_check_tol:
        raise CrossCheckError(f"embedding constant routes disagree: {C!r} vs {C_from_d!r}")
    return WellConstants(
        hardy_C_star=C_star,
        embedding_C=C,
        depth_d=depth.value,
        alpha1=C ** (2.0 / (2.0 - domain.p)),
        n_modes=domain.n_modes,
        embedding_C_from_depth=C_from_d,
        depth_d_from_embedding=depth.embedding_route,
        tolerances={
            "cross_check_relative": cross_check_tol,
            "depth_route_gap": depth.relative_gap,
            "weight_refinement": 1e-8,
        },
        methods={
            "hardy_C_star": "generalized symmetric eigenproblem W v = mu D v",
            "embedding_C": "multi-start ratio ascent on the unit seminorm sphere",
            "depth_d": "Nehari ground state energy",
            "alpha1": "C^(2/(2-p))",
        },
    )
