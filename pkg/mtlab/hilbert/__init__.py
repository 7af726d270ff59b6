"""Hilbert-space bookkeeping for spin chains."""

from mtlab.hilbert.geometry import (  # noqa: F401
    CLOSED, OPEN, ChainGeometry, SiteSet, shields, sites_distance,
)
from mtlab.hilbert.operators import (  # noqa: F401
    DensityMatrix, GlobalOperator, embed, hermitian_fn, partial_trace,
    reduce_operator, state_metrics, tensor_embed, trace_distance,
)
from mtlab.hilbert.channels import (  # noqa: F401
    QuantumChannel, channel_apply, channel_validate,
)
