"""Random inputs shared by the property tests."""

import numpy as np
from hypothesis import strategies as st

from bellbench.domain.models import ChshAngles, TwoQubitState

seeds = st.integers(min_value=0, max_value=2**32 - 1)
angles_deg = st.floats(min_value=-360.0, max_value=360.0, allow_nan=False, allow_infinity=False)


def random_density_matrix(rng: np.random.Generator) -> TwoQubitState:
    """Ginibre-distributed mixed state."""
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2.0
    return TwoQubitState(rho / np.trace(rho).real)


def random_angles(rng: np.random.Generator) -> ChshAngles:
    return ChshAngles.from_degrees(*rng.uniform(0.0, 180.0, size=4))


@st.composite
def density_matrices(draw: st.DrawFn) -> TwoQubitState:
    return random_density_matrix(np.random.default_rng(draw(seeds)))


@st.composite
def chsh_angles(draw: st.DrawFn) -> ChshAngles:
    return ChshAngles.from_degrees(draw(angles_deg), draw(angles_deg), draw(angles_deg), draw(angles_deg))
