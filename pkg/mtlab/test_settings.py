"""Django settings for running automated tests."""

from __future__ import annotations

import os

from mtlab.settings import *  # noqa: F403,F401

# The test runner wants a default connection even though no test uses it
DATABASES["default"] = {  # noqa: F405
    "ENGINE": "django.db.backends.sqlite3",
    "NAME": ":memory:",
}

MTLAB_MAX_DIM = int(os.environ.get("MTLAB_MAX_DIM", "4096"))
MTLAB_WORKERS = int(os.environ.get("MTLAB_WORKERS", "1"))

LOGGING["loggers"]["mtlab"]["level"] = "WARNING"  # noqa: F405
