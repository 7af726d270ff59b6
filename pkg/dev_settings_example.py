from mtlab.settings import *

from os.path import join, dirname

def p(*path):
    return join(dirname(__file__), *path)


DEBUG = True

# Bigger workstation: allow 13 qubits and use a few threads for sweeps
MTLAB_MAX_DIM = 8192
MTLAB_WORKERS = 4

MTLAB_OUTPUT_DIR = p('output')

LOGGING['loggers']['mtlab']['level'] = 'DEBUG'
