"""Belief-propagation flows, their localization and Araki expansionals."""

from mtlab.beliefprop.bounds import BoundConstants  # noqa: F401
from mtlab.beliefprop.flow import (  # noqa: F401
    BPFlow, LocalizedFlow, bp_filter, bp_flow, localize_flow,
)
from mtlab.beliefprop.araki import (  # noqa: F401
    ArakiExpansional, DecayProfile, araki_expansional, araki_locality_profile,
    flow_locality_profile,
)
