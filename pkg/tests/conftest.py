from __future__ import annotations

import math

import pytest

from depolgas.constants import AtomSpecies
from depolgas.kernels import GAUSSIAN, LORENTZIAN, CutoffProfile

# synthetic species used across the microsim tests: an optical-band oscillator
# whose Dicke density is 0.165 per cutoff volume, so a box of a few ell^3
# holds a few hundred atoms near criticality
ELL = 1.0e-6
ND_PER_ELL3 = 0.165
OMEGA_SYNTH = 3.0e8

HBAR = 1.054571817e-34
EPS0 = 8.8541878128e-12


def synthetic_species(core_diameter_over_ell: float = 1.15) -> AtomSpecies:
    n_dicke = ND_PER_ELL3 / ELL**3
    dipole = math.sqrt(HBAR * OMEGA_SYNTH * EPS0 / (2.0 * n_dicke))
    return AtomSpecies(name="synthetic", omega=OMEGA_SYNTH, dipole=dipole,
                       core_diameter=core_diameter_over_ell * ELL)


@pytest.fixture(params=[GAUSSIAN, LORENTZIAN])
def profile(request) -> CutoffProfile:
    return CutoffProfile(ell=1.0, shape=request.param)


@pytest.fixture
def gaussian_profile() -> CutoffProfile:
    return CutoffProfile(ell=1.0, shape=GAUSSIAN)


@pytest.fixture
def lorentzian_profile() -> CutoffProfile:
    return CutoffProfile(ell=1.0, shape=LORENTZIAN)
