"""Maximum-entropy states with local marginal constraints."""

from mtlab.maxent.family import (  # noqa: F401
    MarginalFamily, pair_family_sets, triple_family_sets,
)
from mtlab.maxent.solver import (  # noqa: F401
    MaxEntSolution, family_gibbs, maxent_state, pythagorean_residual,
)
from mtlab.maxent.certificates import (  # noqa: F401
    ChainCertificate, gibbs_family_distance, local_reconstruction,
    thm1_certificate, thm2_certificate, thm3_delta,
)
