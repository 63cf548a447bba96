import os
import sys
import tempfile

import numpy as np
import pytest

BACKEND = os.path.join(os.path.dirname(os.path.abspath(__file__)), "backend")
if BACKEND not in sys.path:
    sys.path.insert(0, BACKEND)

# Keep uploads from the service tests out of the repository
os.environ.setdefault("CELLIPTIC_DATA_DIR", tempfile.mkdtemp(prefix="celliptic-test-"))
os.environ.setdefault("CELLIPTIC_THREADS", "2")


@pytest.fixture
def rng():
    """Seeded generator shared by the randomized suites"""
    return np.random.default_rng(20240611)
