"""Central configuration values loaded from environment variables.

Experiment parameters live in the TOML experiment file (see
:mod:`chaoslab.experiments.config`); this module only carries process-level
settings that may be overridden through the environment or a ``.env`` file.
"""

import os
from dotenv import load_dotenv

load_dotenv()

# Worker threads for replicate blocks; empty means "not set" so the
# experiment file value applies. Only consulted when --threads is absent.
THREADS = os.getenv("CHAOSLAB_THREADS", "")

# Default results directory when neither --out nor output_dir is given
OUTPUT_DIR = os.getenv("CHAOSLAB_OUTPUT_DIR", "results")

# Logging
LOG_LEVEL = os.getenv("CHAOSLAB_LOG_LEVEL", "INFO").upper()
LOG_FILE = os.getenv("CHAOSLAB_LOG_FILE", "")

# Monte Carlo replicates per block. Blocks, not threads, fix the reduction
# order, so changing this changes results at the last bits.
BLOCK_SIZE = int(os.getenv("CHAOSLAB_BLOCK_SIZE", "1024"))


def threads_from_env() -> str:
    """Return the current ``CHAOSLAB_THREADS`` value (read at call time)."""
    return os.getenv("CHAOSLAB_THREADS", THREADS)
