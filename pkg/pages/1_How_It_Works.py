import streamlit as st

from src.config import (
    ACCEPTANCE,
    CATEGORY_LABELS,
    CATEGORY_OF,
    FOREST_MIN_WEIGHT,
    FOREST_TREE_COUNT,
    FOREST_WEIGHT_INCREMENT,
    PUBLISHED_CONSTANT_FEATURES,
    PUBLISHED_RESULTS,
    CICIDS_SPLIT,
)

st.set_page_config(
    page_title="How It Works — Flowstack IDS",
    page_icon="🛡️",
    layout="wide",
)

st.markdown("""
<style>
    #MainMenu {visibility: hidden;}
    footer {visibility: hidden;}

    .stApp {
        border-top: 3px solid #0E7C66;
    }

    .section-title {
        font-size: 1.35rem;
        font-weight: 700;
        color: #0B2B26;
        margin-bottom: 1rem;
    }

    .arch-diagram {
        background: #F5FAF9;
        border: 1px solid #D7E7E3;
        border-radius: 10px;
        padding: 1.5rem;
        font-family: 'SF Mono', 'Fira Code', 'Courier New', monospace;
        font-size: 0.82rem;
        line-height: 1.6;
        overflow-x: auto;
    }

    .stage-card {
        background: #FFFFFF;
        border: 1px solid #D7E7E3;
        border-radius: 10px;
        padding: 1.25rem;
        height: 100%;
    }
    .stage-num {
        color: #0E7C66;
        font-weight: 700;
        font-size: 0.8rem;
        text-transform: uppercase;
    }
    .stage-title {
        font-weight: 700;
        color: #0B2B26;
        margin: 0.3rem 0 0.6rem;
    }
    .stage-desc {
        color: #40534F;
        font-size: 0.9rem;
        line-height: 1.6;
    }
</style>
""", unsafe_allow_html=True)

st.markdown("# How It Works")
st.caption("Three classifiers in a chain; the last one also sees what the first two predicted.")

# --- Stats row ---
train_total = sum(train for train, _ in CICIDS_SPLIT.values())
test_total = sum(test for _, test in CICIDS_SPLIT.values())
col1, col2, col3, col4 = st.columns(4)
col1.metric("Attack types", len(CICIDS_SPLIT) - 1)
col2.metric("Training rows", f"{train_total:,}")
col3.metric("Test rows", f"{test_total:,}")
col4.metric("Published accuracy", f"{PUBLISHED_RESULTS['Accuracy']}%")

st.divider()

# --- Architecture ---
st.markdown('<div class="section-title">Architecture</div>', unsafe_allow_html=True)
st.markdown("""
<div class="arch-diagram">
<pre style="margin: 0;">
  flow record (min-max normalized with training statistics)
       │
       ├──────────────▶ Stage 1: REP tree ........ BENIGN / Attack
       │                        │
       ├──────────────▶ Stage 2: RIPPER rules .... attack category
       │                        │
       ▼                        ▼
  record ++ [code(stage 1), code(stage 2)]
       │
       ▼
  Stage 3: Forest PA ............................ BENIGN or attack type
</pre>
</div>
""", unsafe_allow_html=True)

st.divider()

# --- Stages ---
st.markdown('<div class="section-title">The three stages</div>', unsafe_allow_html=True)
col1, col2, col3 = st.columns(3)

stages = [
    (
        col1,
        "Stage 1",
        "Reduced-error pruning tree",
        "Binary thresholds chosen by information gain on two thirds of the training rows; the remaining "
        "third is used to collapse every subtree that does not beat its own majority leaf.",
    ),
    (
        col2,
        "Stage 2",
        "RIPPER rule list",
        "Rules grown with FOIL gain, pruned on held-out rows and kept while the description length stays "
        "close to the best seen. Classes are learned rarest first; the most common is the default.",
    ),
    (
        col3,
        "Stage 3",
        "Forest by penalizing attributes",
        f"{FOREST_TREE_COUNT} bootstrap trees. Features a tree tests get a fresh, smaller weight the "
        f"shallower they were used; untested ones recover {FOREST_WEIGHT_INCREMENT:.0%} of the way to 1 "
        f"(never below {FOREST_MIN_WEIGHT}). Split merit is gain × weight; the trees vote.",
    ),
]

for col, num, title, desc in stages:
    with col:
        st.markdown(f"""
<div class="stage-card">
    <div class="stage-num">{num}</div>
    <div class="stage-title">{title}</div>
    <div class="stage-desc">{desc}</div>
</div>
        """, unsafe_allow_html=True)

st.divider()

# --- Label spaces ---
st.markdown('<div class="section-title">Label spaces</div>', unsafe_allow_html=True)
st.markdown(
    "Stage 2 learns attack categories, stage 3 the individual attack type. "
    "Both can be switched with `--model2-labels` / `--model3-labels`."
)
grouping = {category: [f for f, c in CATEGORY_OF.items() if c == category] for category in CATEGORY_LABELS}
st.table({"Category": list(grouping), "Attack types": [", ".join(v) for v in grouping.values()]})

st.divider()

# --- Data preparation ---
st.markdown('<div class="section-title">Data preparation</div>', unsafe_allow_html=True)
st.markdown(f"""
- Rows with `Infinity` or `NaN` in **Flow Packets/s** are removed.
- {len(PUBLISHED_CONSTANT_FEATURES)} features that hold one value everywhere are dropped:
  {", ".join(f"`{name}`" for name in PUBLISHED_CONSTANT_FEATURES)}.
- Training takes the first rows of every label; test rows are drawn at random (seeded PCG64) from the rest.
- Normalization statistics come from the training rows only; test values are clamped to [0, 1].
""")

st.markdown('<div class="section-title">Reproduction targets</div>', unsafe_allow_html=True)
st.markdown(f"""
| Metric | Published | Required |
|---|---|---|
| Accuracy | {PUBLISHED_RESULTS['Accuracy']}% | ≥ {ACCEPTANCE['accuracy_min']:.1%} |
| FAR | {PUBLISHED_RESULTS['FAR']}% | ≤ {ACCEPTANCE['far_max']:.1%} |
| DR (Overall) | {PUBLISHED_RESULTS['DR (Overall)']}% | ≥ {ACCEPTANCE['dr_overall_min']:.1%} |
""")
