"""Constants used throughout the application."""

NS_PER_US = 1_000
NS_PER_MS = 1_000_000
NS_PER_S = 1_000_000_000

# Ranker defaults
DEFAULT_WINDOW_NS = 10 * NS_PER_MS
DEFAULT_LOOKAHEAD = 1
# Largest clock difference between two nodes the ranker waits out before
# declaring a RECEIVE noise.
DEFAULT_SKEW_TOLERANCE_NS = 2 * NS_PER_S

# Analysis defaults
DEFAULT_DEFORMED_FREQUENCY = 0.01

# Simulator defaults
DEFAULT_PART_GAP_NS = 2 * NS_PER_US
# Local clocks start here so that negative skews never produce negative timestamps.
SIMULATION_EPOCH_NS = 10 * NS_PER_S
EPHEMERAL_PORTS = (32768, 60999)
NOISE_REQUEST_ID = "-"

# File names inside a run directory
LOG_SUFFIX = ".log"
GROUND_TRUTH_FILE = "ground_truth.txt"
CORRELATOR_CONFIG_FILE = "correlator.yaml"
MANIFEST_FILE = "manifest.json"
# score usually writes next to the correlate outputs, which hold MANIFEST_FILE
SCORE_MANIFEST_FILE = "score_manifest.json"
CAG_FILE = "cags.json"
FLUSH_REPORT_FILE = "flush_report.json"
PATTERNS_FILE = "patterns.json"
REPORT_TEXT_FILE = "report.txt"
SEGMENTS_CSV_FILE = "segments.csv"
MISMATCH_FILE = "mismatches.txt"
