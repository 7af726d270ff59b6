"""Entropies, conditional mutual information and Markov-gap scans."""

from mtlab.info.measures import (  # noqa: F401
    EntropyValue, MarkovGapReport, cmi, conditional_entropy, entropy,
    fannes_bound, fannes_sharp, markov_gap_scan, mutual_information,
    relative_entropy,
)
from mtlab.info.states import (  # noqa: F401
    canonical_markov_state, full_rank_mix, random_state,
)
