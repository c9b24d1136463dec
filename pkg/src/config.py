import os
from dotenv import load_dotenv

load_dotenv()

ROOT_DIR = os.path.dirname(os.path.dirname(__file__))

# Run defaults (overridable through .env, config file, then CLI flags)
SEED = int(os.getenv("IDS_SEED", "1"))
THREADS = int(os.getenv("IDS_THREADS", str(os.cpu_count() or 1)))
OUT_DIR = os.getenv("IDS_OUT_DIR", os.path.join(ROOT_DIR, "runs"))
REPORT_FORMAT = os.getenv("IDS_FORMAT", "table")
CICIDS_DIR = os.getenv("IDS_CICIDS_DIR", os.path.join(ROOT_DIR, "data", "cicids2017"))
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# CICIDS2017 layout
LABEL_COLUMN = "Label"
MARKER_FEATURE = "Flow Packets/s"
INFINITY_MARKERS = ("Infinity", "inf", "+Infinity", "-Infinity", "-inf")
NAN_MARKERS = ("NaN", "nan")

BENIGN = "BENIGN"
ATTACK = "Attack"

# Fine vocabulary in the order the composition and detection tables use
FINE_LABELS = [
    BENIGN,
    "DDoS",
    "DoS slowloris",
    "DoS Slowhttptest",
    "DoS Hulk",
    "DoS GoldenEye",
    "Heartbleed",
    "PortScan",
    "Bot",
    "FTP-Patator",
    "SSH-Patator",
    "Web Attack - Brute Force",
    "Web Attack - XSS",
    "Web Attack - Sql Injection",
    "Infiltration",
]

CATEGORY_LABELS = [BENIGN, "DoS", "PortScan", "Bot", "Brute-Force", "Web Attack", "Infiltration"]

CATEGORY_OF = {
    BENIGN: BENIGN,
    "DDoS": "DoS",
    "DoS slowloris": "DoS",
    "DoS Slowhttptest": "DoS",
    "DoS Hulk": "DoS",
    "DoS GoldenEye": "DoS",
    "Heartbleed": "DoS",
    "PortScan": "PortScan",
    "Bot": "Bot",
    "FTP-Patator": "Brute-Force",
    "SSH-Patator": "Brute-Force",
    "Web Attack - Brute Force": "Web Attack",
    "Web Attack - XSS": "Web Attack",
    "Web Attack - Sql Injection": "Web Attack",
    "Infiltration": "Infiltration",
}

# Spellings found in public copies of the day files (encoding damage included)
LABEL_ALIASES = {
    "Web Attack � Brute Force": "Web Attack - Brute Force",
    "Web Attack � XSS": "Web Attack - XSS",
    "Web Attack � Sql Injection": "Web Attack - Sql Injection",
    "Web Attack – Brute Force": "Web Attack - Brute Force",
    "Web Attack – XSS": "Web Attack - XSS",
    "Web Attack – Sql Injection": "Web Attack - Sql Injection",
    "Web Attack-Brute Force": "Web Attack - Brute Force",
    "Web Attack-XSS": "Web Attack - XSS",
    "Web Attack-Sql Injection": "Web Attack - Sql Injection",
}

# The published removal list names "Fwd Avg Bytes/Bulk" twice; eight unique names remain.
PUBLISHED_CONSTANT_FEATURES = [
    "Bwd PSH Flags",
    "Bwd URG Flags",
    "Fwd Avg Bytes/Bulk",
    "Fwd Avg Packets/Bulk",
    "Fwd Avg Bulk/Rate",
    "Bwd Avg Bytes/Bulk",
    "Bwd Avg Packets/Bulk",
    "Bwd Avg Bulk/Rate",
]

# label: (rows in the eight files, rows after cleaning)
CICIDS_AVAILABLE = {
    BENIGN: (2273097, 2271320),
    "DDoS": (128027, 128025),
    "DoS slowloris": (5796, 5796),
    "DoS Slowhttptest": (5499, 5499),
    "DoS Hulk": (231073, 230124),
    "DoS GoldenEye": (10293, 10293),
    "Heartbleed": (11, 11),
    "PortScan": (158930, 158804),
    "Bot": (1966, 1956),
    "FTP-Patator": (7938, 7935),
    "SSH-Patator": (5897, 5897),
    "Web Attack - Brute Force": (1507, 1507),
    "Web Attack - XSS": (652, 652),
    "Web Attack - Sql Injection": (21, 21),
    "Infiltration": (36, 36),
}

# label: (train rows, test rows); 40,000 + 40,000 in total
CICIDS_SPLIT = {
    BENIGN: (20000, 20000),
    "DDoS": (2700, 3300),
    "DoS slowloris": (1350, 1650),
    "DoS Slowhttptest": (2171, 1169),
    "DoS Hulk": (4500, 5500),
    "DoS GoldenEye": (1300, 700),
    "Heartbleed": (5, 5),
    "PortScan": (3808, 4192),
    "Bot": (936, 624),
    "FTP-Patator": (900, 1100),
    "SSH-Patator": (900, 1100),
    "Web Attack - Brute Force": (910, 490),
    "Web Attack - XSS": (480, 160),
    "Web Attack - Sql Injection": (16, 4),
    "Infiltration": (24, 6),
}

SPLIT_PRESETS = {"table2": CICIDS_SPLIT}

# Learner defaults
REPTREE_MIN_LEAF = int(os.getenv("IDS_REPTREE_MIN_LEAF", "2"))
REPTREE_PRUNE_FRACTION = float(os.getenv("IDS_REPTREE_PRUNE_FRACTION", str(1 / 3)))

RIPPER_PRUNE_FRACTION = float(os.getenv("IDS_RIPPER_PRUNE_FRACTION", str(1 / 3)))
RIPPER_OPTIMIZATION_PASSES = int(os.getenv("IDS_RIPPER_PASSES", "2"))
RIPPER_DL_SLACK_BITS = float(os.getenv("IDS_RIPPER_DL_SLACK_BITS", "64"))
RIPPER_MIN_RULE_COVERAGE = int(os.getenv("IDS_RIPPER_MIN_COVERAGE", "2"))

FOREST_TREE_COUNT = int(os.getenv("IDS_FOREST_TREES", "30"))
FOREST_MIN_LEAF = int(os.getenv("IDS_FOREST_MIN_LEAF", "2"))
FOREST_WEIGHT_INCREMENT = float(os.getenv("IDS_FOREST_ETA", "0.2"))
FOREST_MIN_WEIGHT = 0.01

# Label spaces of stages 2 and 3 ("category" or "fine")
MODEL2_LABELS = os.getenv("IDS_MODEL2_LABELS", "category")
MODEL3_LABELS = os.getenv("IDS_MODEL3_LABELS", "fine")

# Published results of the three-stage model, used by --compare-published
PUBLISHED_RESULTS = {
    "TNR (BENIGN)": 98.855,
    "DR DDoS": 99.879,
    "DR DoS slowloris": 97.758,
    "DR DoS Slowhttptest": 93.841,
    "DR DoS Hulk": 96.782,
    "DR DoS GoldenEye": 67.571,
    "DR Heartbleed": 100.0,
    "DR PortScan": 99.881,
    "DR Bot": 46.474,
    "DR FTP-Patator": 99.636,
    "DR SSH-Patator": 99.909,
    "DR Web Attack - Brute Force": 73.265,
    "DR Web Attack - XSS": 30.625,
    "DR Web Attack - Sql Injection": 50.0,
    "DR Infiltration": 100.0,
    "FAR": 1.145,
    "DR (Overall)": 94.475,
    "Accuracy": 96.665,
    "Training Time": 159.5,
    "Test Time": 2.27,
}

# Reproduction thresholds (fractions, not percentages)
ACCEPTANCE = {
    "accuracy_min": 0.935,
    "far_max": 0.035,
    "dr_overall_min": 0.90,
    "dr_min": {
        "DDoS": 0.99,
        "FTP-Patator": 0.98,
        "PortScan": 0.99,
        "Heartbleed": 0.8,
    },
}
