"""Regime decision and the closed-form constants of the decay and blow-up bounds.

Notation follows the code rather than the literature: ``two_S0`` is the
initial weighted mass plus squared seminorm, ``script_J0`` is the positive
energy gap driving blow-up, ``K`` the growth exponent.
"""

from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

from .domain import Discretization, DomainSpec, QuadratureRule, SpectralField
from .errors import BracketError
from .functionals import FunctionalSnapshot, WellConstants, snapshot

# |J0| below this fraction of d is treated as J0 = 0 (nonnegative branch)
ZERO_ENERGY_TOL = 1e-9


class Regime(str, enum.Enum):
    GLOBAL_DECAY = "GlobalDecay"
    BLOW_UP = "BlowUp"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class DecayConstants:
    delta: float
    kappa_statement: float
    kappa_proof: float


@dataclass(frozen=True)
class ClassificationReport:
    J0: float
    I0: float
    d: float
    regime: Regime
    two_S0: float
    delta: float | None = None
    kappa_statement: float | None = None
    kappa_proof: float | None = None
    eta: float | None = None
    alpha1: float | None = None
    alpha2: float | None = None
    K: float | None = None
    script_J0: float | None = None
    T_upper: float | None = None
    T_lower: float | None = None
    upper_rate_coefficient: float | None = None
    upper_rate_log_coefficient: float | None = None
    upper_rate_exponent: float | None = None
    lower_rate_coefficient: float | None = None
    lower_rate_log_coefficient: float | None = None
    lower_rate_exponent: float | None = None
    C: float | None = None
    C_star: float | None = None
    p: float | None = None
    n_modes: int | None = None

    def as_dict(self) -> dict:
        out = asdict(self)
        out["regime"] = self.regime.value
        return out


def _nonnegative_branch(J0: float, d: float) -> bool:
    return J0 >= -ZERO_ENERGY_TOL * d


def decay_constants(J0: float, d: float, C_star: float, p: float) -> DecayConstants:
    """``delta`` together with the statement and proof forms of ``kappa``."""
    if J0 >= d:
        raise ValueError(f"decay constants need J0 < d (J0={J0!r}, d={d!r})")
    bracket = 1.0 if J0 <= 0 else 1.0 - (J0 / d) ** ((p - 2.0) / 2.0)
    delta = 2.0 / (1.0 + C_star) * bracket
    return DecayConstants(
        delta=delta,
        kappa_statement=4.0 * p * delta / (2.0 * delta + p - 2.0),
        kappa_proof=2.0 * p * delta / (delta + p - 2.0),
    )


def V(alpha: float, C: float, p: float) -> float:
    """``alpha^2/(2C^2) - alpha^p/p``, the lower envelope of ``J`` in ``||u||_p``."""
    return alpha * alpha / (2.0 * C * C) - alpha ** p / p


def eta_alpha2(J0: float, constants: WellConstants, p: float) -> tuple[float, float]:
    """``eta`` and the root ``alpha2 > alpha1`` of ``V(alpha) = J0``.

    ``V`` decreases strictly beyond ``alpha1``; the root is bracketed on
    ``(alpha1, alpha_big)`` with ``alpha_big`` doubled until ``V < J0`` and
    then bisected until the bracket cannot shrink in floating point.
    """
    C = constants.embedding_C
    a1 = constants.alpha1
    d_embed = V(a1, C, p)
    if not J0 < d_embed:
        raise BracketError(f"J0={J0!r} is not below V(alpha1)={d_embed!r}")
    eta = (p / 2.0 - p * a1 ** (-p) * J0) ** (1.0 / (p - 2.0))
    lo = a1
    hi = a1 * max(10.0, 2.0 * eta)
    for _ in range(200):
        if V(hi, C, p) < J0:
            break
        hi *= 2.0
    else:
        raise BracketError("could not bracket alpha2")
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if V(mid, C, p) > J0:
            lo = mid
        else:
            hi = mid
    return eta, 0.5 * (lo + hi)


def growth_constants(J0: float, d: float, eta: float | None, p: float) -> tuple[float, float]:
    """``(K, script_J0)``: ``(p, -J0)`` for negative energy, else the eta branch."""
    if not _nonnegative_branch(J0, d):
        return p, -J0
    eta_p = eta ** p
    return (eta_p - 1.0) * (p - 2.0) / eta_p + 2.0, d - max(J0, 0.0)


def blowup_time_upper(two_S0: float, K: float, script_J0: float) -> float:
    """``T <= 2S(0) / (K (K-2) script_J(0))``."""
    if script_J0 <= 0:
        raise ValueError("upper blow-up bound needs script_J(0) > 0")
    return two_S0 / (K * (K - 2.0) * script_J0)


def blowup_time_lower(two_S0: float, C: float, p: float) -> float:
    """``T >= (2S(0))^{(2-p)/2} / (C^p (p-2))``."""
    if two_S0 <= 0:
        raise ValueError("lower blow-up bound needs nonzero initial data")
    return two_S0 ** ((2.0 - p) / 2.0) / (C ** p * (p - 2.0))


def rate_coefficients(two_S0: float, K: float, script_J0: float, C: float, p: float):
    """Log-coefficients and exponents of both ``(T - t)`` envelopes for ``2S(t)``.

    Returned in log form because the upper coefficient overflows as K -> 2.
    """
    log_upper = (2.0 / (K - 2.0)) * (0.5 * K * math.log(two_S0)
                                    - math.log(K * (K - 2.0) * script_J0))
    log_lower = (2.0 * p / (2.0 - p)) * math.log(C) + (2.0 / (2.0 - p)) * math.log(p - 2.0)
    return log_upper, -2.0 / (K - 2.0), log_lower, 2.0 / (2.0 - p)


def _exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def rate_envelopes(t: float, T: float, report: ClassificationReport) -> tuple[float, float]:
    """``(lower, upper)`` bounds on ``2S(t)`` for a solution blowing up at ``T``."""
    if t >= T:
        raise ValueError(f"envelopes need t < T (t={t!r}, T={T!r})")
    log_gap = math.log(T - t)
    lower = _exp(report.lower_rate_log_coefficient + report.lower_rate_exponent * log_gap)
    upper = _exp(report.upper_rate_log_coefficient + report.upper_rate_exponent * log_gap)
    return lower, upper


def decay_bounds(t: float, report: ClassificationReport) -> dict:
    """Decay envelopes at time ``t`` for a GlobalDecay report.

    ``two_S_proof`` and ``J_proof`` follow the derivation; ``*_statement``
    reproduce the displayed forms; ``J_corrected`` divides the rate by the
    constant in ``L <= A J`` with ``A = (3p-2)/(p-2) + 2p C*/(p-2)``.
    """
    p, Cs, delta = report.p, report.C_star, report.delta
    two_S0, J0 = report.two_S0, report.J0
    L0 = J0 + two_S0
    A_shown = (3.0 * p - 2.0) / (p - 2.0) + Cs
    A_corr = (3.0 * p - 2.0) / (p - 2.0) + 2.0 * p * Cs / (p - 2.0)
    return {
        "two_S_proof": two_S0 * math.exp(-delta * t),
        "two_S_statement": math.sqrt(two_S0) * math.exp(-0.5 * delta * t),
        "lp_norm": report.C * math.sqrt(two_S0) * math.exp(-0.5 * delta * t),
        "J_proof": L0 * math.exp(-A_shown * report.kappa_proof * t),
        "J_statement": L0 * math.exp(-A_shown * report.kappa_statement * t),
        "J_corrected": L0 * math.exp(-report.kappa_proof * t / A_corr),
    }


def classify_snapshot(snap: FunctionalSnapshot, constants: WellConstants, p: float) -> ClassificationReport:
    """Classify from precomputed initial functionals."""
    J0, I0, d = snap.J, snap.I, constants.depth_d
    C, Cs = constants.embedding_C, constants.hardy_C_star
    two_S0 = snap.two_S
    common = dict(J0=J0, I0=I0, d=d, two_S0=two_S0, C=C, C_star=Cs, p=p,
                  alpha1=constants.alpha1, n_modes=constants.n_modes)
    if J0 >= d or I0 == 0.0:
        return ClassificationReport(regime=Regime.INDETERMINATE, **common)
    if I0 > 0:
        dc = decay_constants(J0, d, Cs, p)
        return ClassificationReport(regime=Regime.GLOBAL_DECAY, delta=dc.delta,
                                    kappa_statement=dc.kappa_statement,
                                    kappa_proof=dc.kappa_proof, **common)
    eta = alpha2 = None
    if _nonnegative_branch(J0, d):
        eta, alpha2 = eta_alpha2(max(J0, 0.0), constants, p)
    K, sJ = growth_constants(J0, d, eta, p)
    log_upper, upper_e, log_lower, lower_e = rate_coefficients(two_S0, K, sJ, C, p)
    return ClassificationReport(
        regime=Regime.BLOW_UP, eta=eta, alpha2=alpha2, K=K, script_J0=sJ,
        T_upper=blowup_time_upper(two_S0, K, sJ),
        T_lower=blowup_time_lower(two_S0, C, p),
        upper_rate_coefficient=_exp(log_upper), upper_rate_log_coefficient=log_upper,
        upper_rate_exponent=upper_e,
        lower_rate_coefficient=_exp(log_lower), lower_rate_log_coefficient=log_lower,
        lower_rate_exponent=lower_e,
        **common,
    )


def classify(u0: SpectralField, constants: WellConstants, domain: DomainSpec,
             rule: QuadratureRule | None = None, *,
             disc: Discretization | None = None) -> ClassificationReport:
    """Decide GlobalDecay / BlowUp / Indeterminate and fill every bound."""
    disc = Discretization(domain, rule) if disc is None else disc
    return classify_snapshot(snapshot(u0, 0.0, disc), constants, domain.p)
