"""Access to MTLAB_* settings.

The numerical modules are usable without a configured Django project, in
which case the defaults below apply.
"""

from typing import Any

from django.conf import settings


DEFAULTS: dict[str, Any] = {
    'MTLAB_MAX_DIM': 4096,
    'MTLAB_EIG_CUTOFF': 1e-14,
    'MTLAB_CHOI_MAX_DIM': 4096,
    'MTLAB_WORKERS': 1,
    'MTLAB_OUTPUT_DIR': 'mtlab-output',
    'MTLAB_SOLVER_TOL': 1e-8,
    'MTLAB_SOLVER_MAX_ITER': 5000,
    'MTLAB_ODE_TOL': 1e-8,
    'MTLAB_CORRELATION_RESTARTS': 8,
    'MTLAB_SCHEMA_VERSION': 1,
}


def setting(name: str) -> Any:
    """Return the configured value of an MTLAB_* setting."""
    default = DEFAULTS[name]
    if not settings.configured:
        return default
    return getattr(settings, name, default)
