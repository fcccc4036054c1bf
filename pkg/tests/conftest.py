import dataclasses

import numpy as np
import pytest

from fppe.classify import classify
from fppe.domain import Discretization, DomainSpec
from fppe.evolution import EvolutionConfig, simulate
from fppe.functionals import well_constants
from fppe.stationary import ground_state


def fixed_dt(dt, t_end, scheme="imex_cn", stride=1):
    return EvolutionConfig(scheme=scheme, dt_init=dt, dt_min=dt, dt_max=dt,
                           t_end=t_end, snapshot_stride=stride)


@pytest.fixture(scope="session")
def domain():
    return DomainSpec()


@pytest.fixture(scope="session")
def disc(domain):
    return Discretization(domain)


@pytest.fixture(scope="session")
def rule(disc):
    return disc.rule


@pytest.fixture(scope="session")
def constants(domain, disc):
    return well_constants(domain, disc=disc)


@pytest.fixture(scope="session")
def gs(domain, disc):
    return ground_state(domain, disc=disc)


@pytest.fixture(scope="session")
def phi0(gs):
    return gs.field


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


class Runs:
    """Lazily computed, shared trajectories keyed by (mu, dt, t_end, scheme)."""

    def __init__(self, domain, disc, constants, phi0):
        self.domain, self.disc, self.constants, self.phi0 = domain, disc, constants, phi0
        self._cache = {}

    def get(self, mu, dt=None, t_end=5.0, scheme="imex_cn"):
        key = (mu, dt, t_end, scheme)
        if key not in self._cache:
            cfg = EvolutionConfig(t_end=t_end, scheme=scheme) if dt is None else fixed_dt(dt, t_end, scheme)
            u0 = mu * self.phi0
            rep = classify(u0, self.constants, self.domain, disc=self.disc)
            self._cache[key] = (rep, simulate(u0, cfg, self.domain, disc=self.disc))
        return self._cache[key]


@pytest.fixture(scope="session")
def runs(domain, disc, constants, phi0):
    return Runs(domain, disc, constants, phi0)


def small_domain(**kw):
    base = dict(s=0.25, p=3.0, L=1.0, n_modes=16)
    base.update(kw)
    return DomainSpec(**base)


def with_modes(domain, n):
    return dataclasses.replace(domain, n_modes=n)
