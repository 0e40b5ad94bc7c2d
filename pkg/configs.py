import os
from dotenv import load_dotenv

load_dotenv()

VERSION = "0.1.0"

# Default seed for every experiment (64-bit unsigned)
DEFAULT_SEED = int(os.getenv("ERGODIC_LAB_SEED", "42"))

# Largest Hilbert-space dimension any dense construction may reach
DIMENSION_CAP = int(os.getenv("ERGODIC_LAB_DIMENSION_CAP", "4096"))

# Worker threads for Monte Carlo blocks and time chunks
DEFAULT_THREADS = int(os.getenv("ERGODIC_LAB_THREADS", "1"))

# Report directory
OUTPUT_DIR = os.getenv("ERGODIC_LAB_OUTPUT_DIR", "reports")

# Trials per Monte Carlo block. Each block owns one random stream, so the block
# size is part of what a seed means: changing it changes the sampled states.
MC_BLOCK_SIZE = int(os.getenv("ERGODIC_LAB_BLOCK_SIZE", "1000"))

# Time points evaluated per chunk when building long time series
TIME_CHUNK = int(os.getenv("ERGODIC_LAB_TIME_CHUNK", "4096"))

LOG_LEVEL = os.getenv("ERGODIC_LAB_LOG_LEVEL", "INFO").upper()

# ---------------------------------------------------------------------------
# Numerical tolerances
# ---------------------------------------------------------------------------
NORM_TOL = 1e-12            # |sum |c|^2 - 1|
HERMITIAN_TOL = 1e-12       # max |A - A^dagger|, relative to max(1, ||A||)
TRACE_TOL = 1e-12           # |tr rho - 1|
PSD_TOL = 1e-10             # smallest admissible eigenvalue is -PSD_TOL
PROJECTOR_TOL = 1e-10       # projector algebra of macro cells
COMMUTATOR_TOL = 1e-8       # ||[A, P_shell]||_F for "commuting" partitions
SHELL_TOL = 1e-8            # state leakage out of an energy shell
EDGE_TOL = 1e-10            # eigenvalue-to-band-edge tie distance
WEIGHT_SUM_TOL = 1e-8       # sum of macro-cell weights
EIGEN_RESIDUAL_TOL = 1e-8   # ||H v - E v|| relative to ||H||
ORTHONORMAL_TOL = 1e-10     # ||V^dagger V - I||
