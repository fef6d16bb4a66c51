from dotenv import load_dotenv
import math
import os
from pathlib import Path

# Get the project root directory
ROOT_DIR = Path(__file__).parent.parent.parent
# Load .env file from project root
load_dotenv(ROOT_DIR / '.env')

DATA_DIR = Path(os.getenv("AGENCY_DATA_DIR", ROOT_DIR / "data"))
PRESETS_DIR = Path(os.getenv("AGENCY_PRESETS_DIR", DATA_DIR / "presets"))
SCENARIOS_DIR = DATA_DIR / "scenarios"
DICTIONARIES_DIR = DATA_DIR / "dictionaries"
CONFIGS_DIR = DATA_DIR / "configs"
OUTPUT_DIR = Path(os.getenv("AGENCY_OUTPUT_DIR", ROOT_DIR / "output"))

DEFAULT_SEED = int(os.getenv("AGENCY_SEED", "20200101"))

# Search defaults
BFS_NODE_CAP = int(os.getenv("AGENCY_BFS_NODE_CAP", "2000000"))
MCTS_ITERATIONS = int(os.getenv("AGENCY_MCTS_ITERATIONS", "1000"))
MCTS_EXPLORATION = float(os.getenv("AGENCY_MCTS_EXPLORATION", str(math.sqrt(2.0))))

# Finite differences and gradient-flow integration
FD_STEP = float(os.getenv("AGENCY_FD_STEP", "1e-5"))
FLOW_STEP = float(os.getenv("AGENCY_FLOW_STEP", "1e-3"))
STRAIGHTNESS_TOLERANCE = float(os.getenv("AGENCY_STRAIGHTNESS_TOLERANCE", "1e-6"))
GAP_TOLERANCE = 1e-9

# State-key rounding used by exhaustive search memoization
STATE_KEY_DECIMALS = 9

MIN_GROUP_SIZE = 30

LOG_LEVEL = os.getenv("AGENCY_LOG_LEVEL", "INFO")
