"""Short-range Hamiltonians, Gibbs states and correlations."""

from mtlab.thermal.hamiltonians import (  # noqa: F401
    PRESETS, Hamiltonian, build_preset, restrict_hamiltonian,
)
from mtlab.thermal.gibbs import (  # noqa: F401
    GibbsState, MiddleSplit, gibbs_state, split_middle_interaction,
)
from mtlab.thermal.correlation import (  # noqa: F401
    CorrelationFit, CorrelationReport, correlation, correlation_length_fit,
)
