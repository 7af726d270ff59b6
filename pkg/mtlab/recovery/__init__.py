"""Recovery maps, repeat-until-success recovery and Gibbs-state preparation."""

from mtlab.recovery.ledger import LedgerEntry  # noqa: F401
from mtlab.recovery.petz import RecoveryReport, petz_recovery, petz_report  # noqa: F401
from mtlab.recovery.kappa import (  # noqa: F401
    KappaMap, RecoveryInstrument, bp_recovery_kappa, normalize_instrument,
)
from mtlab.recovery.rus import RUSPlan, rus_layout, rus_recovery  # noqa: F401
from mtlab.recovery.decay import CMIDecayTable, cmi_decay_experiment  # noqa: F401
from mtlab.recovery.preparation import (  # noqa: F401
    DepthTwoResult, depth_two_layout, depth_two_prepare,
)
from mtlab.recovery.reconstruction import ReconstructedStates, thm3_states  # noqa: F401
