# Django settings for the mtlab project.

DEBUG = False

ADMINS: list[tuple[str, str]] = []

# Results are written as files; nothing is persisted in a database
DATABASES: dict[str, dict[str, str]] = {}

# Only used by Django's signing machinery, which mtlab never touches
SECRET_KEY = 'mtlab-has-no-secrets'

TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

INSTALLED_APPS = [
    'mtlab.lab',
]

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Dense matrices only. 4096 is 12 qubits; raise with --max-dim at your peril
MTLAB_MAX_DIM = 4096

# Eigenvalues below this are treated as zero by log, sqrt and entropies
MTLAB_EIG_CUTOFF = 1e-14

# Channels whose Choi matrix would be larger than this are validated through
# the Heisenberg picture only
MTLAB_CHOI_MAX_DIM = 4096

# Worker threads used for independent sweep points
MTLAB_WORKERS = 1

# Where `mtlab run` writes results unless --out is given
MTLAB_OUTPUT_DIR = 'mtlab-output'

# Default numerical tolerances
MTLAB_SOLVER_TOL = 1e-8
MTLAB_SOLVER_MAX_ITER = 5000
MTLAB_ODE_TOL = 1e-8
MTLAB_CORRELATION_RESTARTS = 8

# Bump when CSV columns or ledger keys change
MTLAB_SCHEMA_VERSION = 1


LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'mtlab': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
    },
}
