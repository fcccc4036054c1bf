"""Computational domain, sine eigenbasis and singular-weight quadrature.

The domain is the interval ``(0, L)`` with the singular point of the weight
``|x|^{-2s}`` sitting on the left boundary.  Fields are stored as coefficient
vectors in the L²-orthonormal Dirichlet eigenbasis

    e_i(x) = sqrt(2/L) sin(i pi x / L),    lambda_i = (i pi / L)^2,

in which the spectral fractional Laplacian is diagonal.  All integrals
(weight matrix, L^p norms, the nonlinear load) use one composite
Gauss-Legendre rule whose panels are graded towards ``x = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import ConfigError, QuadratureInstabilityError

DEFAULT_WEIGHT_TOL = 1e-8


@dataclass(frozen=True)
class QuadratureConfig:
    """Graded composite Gauss-Legendre layout.

    Panel ``k`` spans ``[(k/P)^g L, ((k+1)/P)^g L]`` with ``P = n_panels`` and
    ``g = grading_exponent``; each panel carries ``nodes_per_panel`` nodes.
    """

    n_panels: int = 64
    grading_exponent: float = 2.0
    nodes_per_panel: int = 16

    def __post_init__(self):
        if int(self.n_panels) != self.n_panels or self.n_panels < 1:
            raise ConfigError(f"n_panels must be a positive integer, got {self.n_panels!r}")
        if int(self.nodes_per_panel) != self.nodes_per_panel or self.nodes_per_panel < 1:
            raise ConfigError(
                f"nodes_per_panel must be a positive integer, got {self.nodes_per_panel!r}"
            )
        if not np.isfinite(self.grading_exponent) or self.grading_exponent < 1:
            raise ConfigError(
                f"grading_exponent must be >= 1, got {self.grading_exponent!r}"
            )

    def refined(self) -> "QuadratureConfig":
        """Twice the panels and twice the nodes per panel."""
        return QuadratureConfig(
            2 * self.n_panels, self.grading_exponent, 2 * self.nodes_per_panel
        )


@dataclass(frozen=True)
class DomainSpec:
    """Interval ``(0, L)``, fractional order ``s``, exponent ``p``, mode count."""

    s: float = 0.25
    p: float = 3.0
    L: float = 1.0
    n_modes: int = 64
    quad: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __post_init__(self):
        if not (0.0 < self.s < 0.5):
            raise ConfigError(f"s must satisfy 0 < s < 1/2 on a 1-D domain, got s={self.s!r}")
        crit = self.critical_exponent
        if not self.p > 2.0:
            raise ConfigError(f"p must exceed 2, got p={self.p!r}")
        if self.p > crit:
            raise ConfigError(
                f"p exceeds critical exponent 2/(1-2s) = {crit!r}, got p={self.p!r}"
            )
        if not (np.isfinite(self.L) and self.L > 0):
            raise ConfigError(f"L must be positive, got L={self.L!r}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ConfigError(f"n_modes must be a positive integer, got {self.n_modes!r}")

    @property
    def x_left(self) -> float:
        return 0.0

    @property
    def x_right(self) -> float:
        return self.L

    @property
    def critical_exponent(self) -> float:
        return 2.0 / (1.0 - 2.0 * self.s)

    def eigenvalues(self) -> np.ndarray:
        """``lambda_i`` for ``i = 1..N``."""
        i = np.arange(1, self.n_modes + 1)
        return (i * np.pi / self.L) ** 2


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        weights = np.array(self.weights, dtype=float)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        nodes.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Coefficients ``a_1..a_N`` of ``u = sum a_i e_i``."""

    coeffs: np.ndarray

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=float)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("coefficient vector must be 1-D and non-empty")
        if not np.all(np.isfinite(a)):
            raise ValueError("coefficient vector contains non-finite entries")
        a.flags.writeable = False
        object.__setattr__(self, "coeffs", a)

    @classmethod
    def zeros(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes))

    @classmethod
    def mode(cls, i: int, n_modes: int, amplitude: float = 1.0) -> "SpectralField":
        """``amplitude * e_i`` (1-based index)."""
        if not 1 <= i <= n_modes:
            raise IndexError(f"mode index {i} outside 1..{n_modes}")
        a = np.zeros(n_modes)
        a[i - 1] = amplitude
        return cls(a)

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.coeffs - other.coeffs)

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, SpectralField):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """``W_ij = int e_i e_j |x|^{-2s} dx`` assembled by quadrature."""

    entries: np.ndarray

    def __post_init__(self):
        W = np.array(self.entries, dtype=float)
        if W.ndim != 2 or W.shape[0] != W.shape[1]:
            raise ValueError("weight matrix must be square")
        scale = max(np.abs(W).max(), 1.0)
        if np.abs(W - W.T).max() > 1e-12 * scale:
            raise ValueError("weight matrix is not symmetric")
        try:
            np.linalg.cholesky(W)
        except np.linalg.LinAlgError as exc:
            raise ValueError("weight matrix is not positive definite") from exc
        W.flags.writeable = False
        object.__setattr__(self, "entries", W)

    @property
    def n_modes(self) -> int:
        return self.entries.shape[0]


def build_quadrature(domain: DomainSpec) -> QuadratureRule:
    """Composite Gauss-Legendre rule on panels graded towards ``x = 0``."""
    q = domain.quad
    edges = domain.L * (np.arange(q.n_panels + 1) / q.n_panels) ** q.grading_exponent
    ref_nodes, ref_weights = leggauss(q.nodes_per_panel)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    nodes = (0.5 * (left + right) + half * ref_nodes).ravel()
    weights = (half * ref_weights).ravel()
    return QuadratureRule(nodes, weights)


def eigenpair(i: int, domain: DomainSpec) -> tuple[float, Callable[[np.ndarray], np.ndarray]]:
    """Eigenvalue and evaluator of the ``i``-th Dirichlet eigenfunction (1-based)."""
    if not 1 <= i <= domain.n_modes:
        raise IndexError(f"mode index {i} outside 1..{domain.n_modes}")
    L = domain.L
    k = i * np.pi / L
    amp = np.sqrt(2.0 / L)

    def e(x):
        return amp * np.sin(k * np.asarray(x, dtype=float))

    return k * k, e


def basis_matrix(domain: DomainSpec, x: np.ndarray) -> np.ndarray:
    """``B[i, q] = e_{i+1}(x_q)``, shape ``(N, len(x))``."""
    i = np.arange(1, domain.n_modes + 1)
    return np.sqrt(2.0 / domain.L) * np.sin(np.outer(i, np.asarray(x, dtype=float)) * (np.pi / domain.L))


def synthesize(field: SpectralField, nodes: np.ndarray, domain: DomainSpec) -> np.ndarray:
    """Point values ``u(x_q) = sum_i a_i e_i(x_q)``."""
    nodes = np.asarray(nodes, dtype=float)
    if field.n_modes != domain.n_modes:
        raise ValueError(f"field has {field.n_modes} modes, domain expects {domain.n_modes}")
    if nodes.size and (nodes.min() < 0 or nodes.max() > domain.L):
        raise ValueError("evaluation nodes must lie in [0, L]")
    return field.coeffs @ basis_matrix(domain, nodes)


def analyze(values: np.ndarray, rule: QuadratureRule, domain: DomainSpec) -> SpectralField:
    """Coefficients ``a_i = int phi e_i dx`` from values at the rule nodes."""
    values = np.asarray(values, dtype=float)
    if values.shape != rule.nodes.shape:
        raise ValueError(
            f"expected {rule.nodes.size} values aligned with the rule nodes, got {values.shape}"
        )
    return SpectralField(basis_matrix(domain, rule.nodes) @ (rule.weights * values))


def frac_laplacian(field: SpectralField, domain: DomainSpec, order: float | None = None) -> SpectralField:
    """Apply ``(-Delta)^order`` (``order`` defaults to ``domain.s``)."""
    order = domain.s if order is None else order
    return SpectralField(field.coeffs * domain.eigenvalues() ** order)


def _assemble_weight(domain: DomainSpec, rule: QuadratureRule) -> np.ndarray:
    B = basis_matrix(domain, rule.nodes)
    W = (B * (rule.weights * rule.nodes ** (-2.0 * domain.s))) @ B.T
    return 0.5 * (W + W.T)


def build_weight_matrix(
    domain: DomainSpec,
    rule: QuadratureRule,
    *,
    refinement_tol: float | None = DEFAULT_WEIGHT_TOL,
) -> WeightMatrix:
    """Assemble the singular-weight Gram matrix.

    When ``refinement_tol`` is not None the matrix is re-assembled on the
    refined rule (twice the panels and nodes) and a
    :class:`QuadratureInstabilityError` is raised if any entry moves by more
    than the tolerance.
    """
    W = _assemble_weight(domain, rule)
    if refinement_tol is not None:
        fine = DomainSpec(domain.s, domain.p, domain.L, domain.n_modes, domain.quad.refined())
        W_fine = _assemble_weight(fine, build_quadrature(fine))
        change = float(np.abs(W - W_fine).max())
        if change > refinement_tol:
            raise QuadratureInstabilityError(
                f"weight matrix changed by {change:.3e} under refinement (tol {refinement_tol:.1e})"
            )
    return WeightMatrix(W)


class Discretization:
    """Precomputed tables for one (domain, rule) pair.

    Holds the basis sampled at the rule nodes, the eigenvalue multipliers
    ``lambda_i^s`` and the weight matrix so that the hot loops of the
    optimizers and the time stepper reduce to dense matrix-vector products.
    Instances are read-only after construction.
    """

    def __init__(self, domain: DomainSpec, rule: QuadratureRule | None = None,
                 weight: WeightMatrix | None = None):
        self.domain = domain
        self.rule = build_quadrature(domain) if rule is None else rule
        self.lam = domain.eigenvalues()
        self.D = self.lam ** domain.s
        self.B = basis_matrix(domain, self.rule.nodes)
        self._Bw = self.B * self.rule.weights
        self._weight = weight
        for arr in (self.lam, self.D, self.B, self._Bw):
            arr.flags.writeable = False

    @cached_property
    def weight(self) -> WeightMatrix:
        if self._weight is not None:
            return self._weight
        return build_weight_matrix(self.domain, self.rule)

    @property
    def W(self) -> np.ndarray:
        return self.weight.entries

    @property
    def p(self) -> float:
        return self.domain.p

    @property
    def n_modes(self) -> int:
        return self.domain.n_modes

    def values(self, a: np.ndarray) -> np.ndarray:
        return a @ self.B

    def project(self, values: np.ndarray) -> np.ndarray:
        return self._Bw @ values

    def seminorm_sq(self, a: np.ndarray) -> float:
        return float(a @ (self.D * a))

    def singular_mass(self, a: np.ndarray) -> float:
        return float(a @ self.W @ a)

    def l2_norm(self, a: np.ndarray) -> float:
        return float(np.sqrt(self.rule.weights @ self.values(a) ** 2))

    def lp_power(self, a: np.ndarray, r: float | None = None) -> float:
        """``int |u|^r dx`` (``r`` defaults to ``p``)."""
        r = self.p if r is None else r
        return float(self.rule.weights @ np.abs(self.values(a)) ** r)

    def nonlinear_load(self, a: np.ndarray, r: float | None = None) -> np.ndarray:
        """``F_i = int |u|^{r-2} u e_i dx``."""
        r = self.p if r is None else r
        u = self.values(a)
        return self.project(np.abs(u) ** (r - 2.0) * u)

    def energy(self, a: np.ndarray) -> float:
        return 0.5 * self.seminorm_sq(a) - self.lp_power(a) / self.p

    def nehari(self, a: np.ndarray) -> float:
        return self.seminorm_sq(a) - self.lp_power(a)
