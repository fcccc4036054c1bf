"""Invariant suite behind the ``verify`` subcommand.

Each check returns a :class:`PropertyResult`; the suite never raises on
a failed property, only on a numerical breakdown.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .classify import Regime, classify, decay_bounds, eta_alpha2, growth_constants, rate_envelopes
from .domain import Discretization, DomainSpec, SpectralField, frac_laplacian
from .evolution import EvolutionConfig, dSdt_check, energy_residual, simulate
from .functionals import hardy_rayleigh_ascent, well_constants
from .stationary import SolverConfig, ground_state


@dataclass
class PropertyResult:
    name: str
    passed: bool
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "status": "pass" if self.passed else "fail", **self.detail}


@dataclass
class Context:
    domain: DomainSpec
    disc: Discretization
    seed: int
    solver: SolverConfig
    constants: object = None
    phi0: SpectralField = None
    _runs: dict = field(default_factory=dict)

    def run(self, mu: float, t_end: float, dt: float | None = None):
        key = (mu, t_end, dt)
        if key not in self._runs:
            cfg = EvolutionConfig(t_end=t_end)
            if dt is not None:
                cfg = dataclasses.replace(cfg, dt_init=dt, dt_min=dt, dt_max=dt)
            u0 = mu * self.phi0
            rep = classify(u0, self.constants, self.domain, disc=self.disc)
            self._runs[key] = (rep, simulate(u0, cfg, self.domain, disc=self.disc))
        return self._runs[key]


def _spectral(ctx: Context):
    d, D = ctx.disc, ctx.domain
    B, w = d.B, d.rule.weights
    G = (B * w) @ B.T
    ortho = float(np.abs(G - np.eye(D.n_modes)).max())
    rng = np.random.default_rng(ctx.seed)
    a = rng.standard_normal(D.n_modes)
    parseval = float(np.abs(d.project(d.values(a)) - a).max())
    lam = D.eigenvalues()
    b = rng.standard_normal(D.n_modes)
    fa, fb = SpectralField(a), SpectralField(b)
    combo = frac_laplacian(2.0 * fa + fb, D).coeffs
    lin = float(np.abs(combo - (2.0 * frac_laplacian(fa, D).coeffs
                                + frac_laplacian(fb, D).coeffs)).max())
    Wm = ctx.disc.W
    return [
        PropertyResult("domain.orthonormality", ortho <= 1e-10, {"max_error": ortho}),
        PropertyResult("domain.parseval_round_trip", parseval <= 1e-9, {"max_error": parseval}),
        PropertyResult("domain.eigenvalues_increasing", bool(np.all(np.diff(lam) > 0))),
        PropertyResult("domain.weight_spd",
                       bool(np.array_equal(Wm, Wm.T) and np.linalg.eigvalsh(Wm).min() > 0)),
        PropertyResult("domain.frac_laplacian_linearity",
                       lin <= 1e-12 * float(np.abs(combo).max()), {"max_error": lin}),
    ]


def _functionals(ctx: Context):
    d, c = ctx.disc, ctx.constants
    p = ctx.domain.p
    rng = np.random.default_rng(ctx.seed + 1)
    env = 1.0 / np.arange(1, ctx.domain.n_modes + 1)
    ident = hardy = embed = even = 0.0
    for _ in range(100):
        a = rng.standard_normal(ctx.domain.n_modes) * env
        semi, lpp = d.seminorm_sq(a), d.lp_power(a)
        J, I = d.energy(a), d.nehari(a)
        scale = max(abs(J), 1e-300)
        ident = max(ident, abs(J - (I / p + (p - 2) / (2 * p) * semi)) / scale,
                    abs(J - (I / 2 + (p - 2) / (2 * p) * lpp)) / scale)
        hardy = max(hardy, d.singular_mass(a) - c.hardy_C_star * semi)
        embed = max(embed, lpp ** (1 / p) - c.embedding_C * np.sqrt(semi))
        even = max(even, abs(d.energy(-a) - J), abs(d.nehari(-a) - I))
    ascent = hardy_rayleigh_ascent(ctx.domain, d.weight, seed=ctx.seed)
    depth_gap = abs(c.depth_d - c.depth_d_from_embedding) / c.depth_d
    return [
        PropertyResult("functionals.energy_nehari_identities", ident <= 1e-10, {"max_rel_error": ident}),
        PropertyResult("functionals.hardy_inequality_samplewise", hardy <= 1e-9, {"max_excess": hardy}),
        PropertyResult("functionals.embedding_inequality_samplewise", embed <= 1e-9, {"max_excess": embed}),
        PropertyResult("functionals.hardy_eigen_vs_ascent",
                       abs(ascent - c.hardy_C_star) <= 1e-6 * c.hardy_C_star,
                       {"eigen": c.hardy_C_star, "ascent": ascent}),
        PropertyResult("functionals.depth_embedding_identity", depth_gap <= 0.02, {"relative_gap": depth_gap}),
        PropertyResult("functionals.evenness", even == 0.0, {"max_difference": even}),
    ]


def _stationary(ctx: Context):
    d = ctx.disc
    a = ctx.phi0.coeffs
    semi = d.seminorm_sq(a)
    member = abs(d.nehari(a)) / semi
    r = d.D * a - d.nonlinear_load(a)
    res = float(np.sqrt(r @ (r / d.D)))
    mus = np.linspace(0.5, 1.5, 101)
    fib = [d.energy(m * a) for m in mus]
    signs_ok = all(d.nehari(m * a) > 0 for m in (0.5, 0.9)) and all(
        d.nehari(m * a) < 0 for m in (1.1, 1.5))
    small = dataclasses.replace(ctx.domain, n_modes=16)
    sub = ground_state(small, solver_cfg=ctx.solver)
    return [
        PropertyResult("stationary.nehari_membership", member <= 1e-9, {"relative_I": member}),
        PropertyResult("stationary.residual", res <= 1e-8, {"residual": res}),
        PropertyResult("stationary.fibering_maximum_at_one",
                       int(np.argmax(fib)) == 50, {"argmax_mu": float(mus[int(np.argmax(fib))])}),
        PropertyResult("stationary.fibering_sign_structure", signs_ok),
        PropertyResult("stationary.depth_nonincreasing_in_N",
                       ctx.constants.depth_d <= sub.J_value + 1e-8,
                       {"d_N": ctx.constants.depth_d, "d_16": sub.J_value}),
    ]


def _classify(ctx: Context):
    c, p = ctx.constants, ctx.domain.p
    d = c.depth_d
    sound = True
    for mu in (0.25, 0.5, 0.75, 0.95):
        sound &= classify(mu * ctx.phi0, c, ctx.domain, disc=ctx.disc).regime is Regime.GLOBAL_DECAY
    for mu in (1.05, 1.25, 1.5, 2.0, 3.0):
        sound &= classify(mu * ctx.phi0, c, ctx.domain, disc=ctx.disc).regime is Regime.BLOW_UP
    theta = True
    K_vals = []
    for frac in np.linspace(0.0, 0.95, 20):
        eta, a2 = eta_alpha2(frac * d, c, p)
        theta &= a2 / c.alpha1 >= eta - 1e-9 and eta > 1
        K_vals.append(growth_constants(frac * d, d, eta, p)[0])
    near = growth_constants(d * (1 - 1e-8), d, eta_alpha2(d * (1 - 1e-8), c, p)[0], p)[0]
    K_ok = all(np.diff(K_vals) < 0) and 2 < near < 2 + 1e-3 and growth_constants(-1.0, d, None, p)[0] == p
    return [
        PropertyResult("classify.hypothesis_soundness", bool(sound)),
        PropertyResult("classify.alpha_ratio_exceeds_eta", bool(theta)),
        PropertyResult("classify.K_limits", bool(K_ok), {"K_near_d": near}),
    ]


def _evolution(ctx: Context):
    out = []
    rep, rec = ctx.run(0.5, 5.0, dt=1e-3)
    t = rec.column("t")
    J = rec.column("J")
    two_S = rec.column("two_S")
    semi = rec.column("seminorm_sq")
    I = rec.column("I")
    tol = 1e-9 * max(1.0, abs(rep.J0))
    out.append(PropertyResult("evolution.energy_monotone",
                              bool(np.all(np.diff(J) <= tol)),
                              {"max_increase": float(np.diff(J).max())}))
    out.append(PropertyResult("evolution.well_invariance", bool(np.all(I > -1e-6 * semi))))
    bounds = [decay_bounds(tk, rep) for tk in t]
    out.append(PropertyResult(
        "evolution.decay_two_S_proof_form",
        bool(all(y <= b["two_S_proof"] * 1.05 for y, b in zip(two_S, bounds)))))
    out.append(PropertyResult(
        "evolution.decay_J_displayed_rate",
        bool(all(j <= b["J_proof"] * 1.05 for j, b in zip(J, bounds)))))
    out.append(PropertyResult(
        "evolution.decay_J_corrected_rate",
        bool(all(j <= b["J_corrected"] * 1.05 for j, b in zip(J, bounds)))))
    out.append(PropertyResult("evolution.energy_identity",
                              energy_residual(rec, rep.J0) <= 1e-6,
                              {"residual": energy_residual(rec, rep.J0)}))
    out.append(PropertyResult("evolution.dSdt_identity", dSdt_check(rec) <= 1e-3,
                              {"deviation": dSdt_check(rec)}))

    for mu in (1.5, 3.0):
        rep, rec = ctx.run(mu, 20.0)
        o = rec.outcome
        detail = {"T_lower": rep.T_lower, "T_star": o.T_star, "T_upper": rep.T_upper}
        ok = (o.kind == "BlowUpDetected" and bool(o.T_star_reliable)
              and rep.T_lower <= o.T_star <= rep.T_upper)
        out.append(PropertyResult(f"evolution.blowup_time_sandwich[mu={mu}]", ok, detail))
        if rep.alpha2 is not None:
            lp = rec.column("lp_norm")
            ok = bool(np.all(lp >= rep.alpha2 * (1 - 1e-3))
                      and np.all(np.sqrt(rec.column("seminorm_sq"))
                                 >= rep.alpha2 / rep.C * (1 - 1e-3)))
            out.append(PropertyResult(f"evolution.lp_lower_bound[mu={mu}]", ok,
                                      {"alpha2": rep.alpha2, "min_lp": float(lp.min())}))
        if o.kind == "BlowUpDetected":
            env_ok = True
            for s in rec.snapshots:
                if s.t < o.T_star:
                    lo, hi = rate_envelopes(s.t, o.T_star, rep)
                    env_ok &= lo * (1 - 0.05) <= 2 * s.S <= hi * (1 + 0.05)
            out.append(PropertyResult(f"evolution.rate_envelopes[mu={mu}]", bool(env_ok)))
    return out


def run_suite(domain: DomainSpec, *, seed: int = 42, solver: SolverConfig | None = None,
              disc: Discretization | None = None) -> list[PropertyResult]:
    solver = SolverConfig(seed=seed) if solver is None else solver
    disc = Discretization(domain) if disc is None else disc
    constants = well_constants(domain, disc=disc, seed=seed, solver_cfg=solver)
    gs = ground_state(domain, solver_cfg=solver, disc=disc)
    ctx = Context(domain, disc, seed, solver, constants, gs.field)
    results = []
    for group in (_spectral, _functionals, _stationary, _classify, _evolution):
        results.extend(group(ctx))
    return results
