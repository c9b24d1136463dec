import os
import tempfile
import time

import pandas as pd
import streamlit as st

from src import stack
from src.config import OUT_DIR, PUBLISHED_RESULTS
from src.errors import ConfigError, InputError, SchemaMismatchError, StageError
from src.flowdata import Dataset, load_csv
from src.metrics import build_report, check_acceptance, confusion, report_rows

# --- Page config ---
st.set_page_config(
    page_title="Flowstack IDS",
    page_icon="🛡️",
    layout="wide",
    initial_sidebar_state="expanded",
)

# --- Custom CSS ---
st.markdown("""
<style>
    #MainMenu {visibility: hidden;}
    footer {visibility: hidden;}

    .stApp {
        border-top: 3px solid #0E7C66;
    }

    .hero-title {
        font-size: 2rem;
        font-weight: 700;
        color: #0B2B26;
        margin-bottom: 0;
        letter-spacing: -0.02em;
    }
    .hero-subtitle {
        color: #40534F;
        font-size: 1rem;
        margin-top: 0.5rem;
        margin-bottom: 1.5rem;
    }

    .stage-pill {
        display: inline-block;
        background: #E6F4F1;
        color: #0E7C66;
        border-radius: 12px;
        padding: 0.2rem 0.65rem;
        margin: 0.15rem;
        font-size: 0.78rem;
        font-weight: 600;
    }

    .check-pass {color: #0E7C66; font-weight: 600;}
    .check-fail {color: #B42318; font-weight: 600;}
</style>
""", unsafe_allow_html=True)


@st.cache_resource(show_spinner="Loading hierarchy...")
def load_model(path: str, mtime: float) -> stack.HierarchicalModel:
    """Cached per file path and modification time."""
    return stack.load(path)


def load_labelled(upload) -> Dataset:
    with tempfile.NamedTemporaryFile("wb", suffix=".csv", delete=False) as f:
        f.write(upload.getvalue())
        path = f.name
    try:
        return load_csv(path)
    finally:
        os.unlink(path)


def run_evaluation(model: stack.HierarchicalModel, data: Dataset) -> dict:
    values, truths = stack.labelled_inputs(model, data)

    started = time.perf_counter()
    predicted = stack.predict_hierarchy_batch(model, values)
    seconds = time.perf_counter() - started

    cm = confusion(predicted.final, truths, model.model3.classes)
    return {"predicted": predicted, "truths": truths, "cm": cm, "seconds": seconds}


# --- Sidebar ---
with st.sidebar:
    st.markdown("### Flowstack IDS")
    st.caption("Three-stage flow classifier: REP tree, RIPPER rules, Forest PA")
    st.divider()

    model_path = st.text_input("Hierarchy file", os.path.join(OUT_DIR, "hierarchy.json"))
    upload = st.file_uploader("Labelled flow CSV", type=["csv"])
    compare = st.checkbox("Compare with published figures", value=True)
    run = st.button("Evaluate", use_container_width=True, type="primary")

    st.divider()
    st.markdown("""
    <span class="stage-pill">1 · Benign / Attack</span>
    <span class="stage-pill">2 · Attack category</span>
    <span class="stage-pill">3 · Attack type</span>
    """, unsafe_allow_html=True)
    st.markdown("[How It Works](How_It_Works)")

# --- Main content ---
st.markdown('<div class="hero-title">Intrusion detection evaluation</div>', unsafe_allow_html=True)
st.markdown(
    '<div class="hero-subtitle">Score a trained hierarchy on a labelled CICIDS2017-style CSV and audit what '
    'each stage predicted.</div>',
    unsafe_allow_html=True,
)

if run:
    try:
        if upload is None:
            raise InputError("Upload a labelled CSV first")
        if not os.path.exists(model_path):
            raise InputError(f"No hierarchy file at {model_path}; run `python -m src.cli train` first")
        model = load_model(model_path, os.path.getmtime(model_path))
        st.session_state.result = run_evaluation(model, load_labelled(upload))
    except SchemaMismatchError as e:
        st.error(f"The CSV does not match the model's features: {e}")
    except (InputError, StageError) as e:
        st.error(f"Could not evaluate: {e}")
    except ConfigError as e:
        st.error(f"Configuration problem: {e}")
    except Exception as e:
        st.error(f"Something went wrong: {e}")

result = st.session_state.get("result")
if result:
    cm = result["cm"]
    report = build_report(cm, test_seconds=result["seconds"])

    col1, col2, col3, col4 = st.columns(4)
    rows = dict(report_rows(report))
    col1.metric("Accuracy", rows.get("Accuracy", "n/a"))
    col2.metric("DR (Overall)", rows.get("DR (Overall)", "n/a"))
    col3.metric("FAR", rows.get("FAR", "n/a"))
    col4.metric("Records", f"{cm.total:,}")

    st.markdown("##### Detection rates")
    table = pd.DataFrame(report_rows(report), columns=["Metric", "Measured"])
    if compare:
        table["Published"] = [PUBLISHED_RESULTS.get(name) for name in table["Metric"]]
    st.dataframe(table, hide_index=True, use_container_width=True)

    if compare:
        for description, passed in check_acceptance(report):
            css = "check-pass" if passed else "check-fail"
            st.markdown(f'<span class="{css}">{"PASS" if passed else "FAIL"}</span> {description}', unsafe_allow_html=True)

    st.markdown("##### Confusion matrix (rows actual, columns predicted)")
    st.dataframe(pd.DataFrame(cm.counts, index=cm.labels, columns=cm.labels), use_container_width=True)

    st.markdown("##### Stage audit")
    predicted = result["predicted"]
    audit = pd.DataFrame(
        {
            "actual": result["truths"],
            "stage 1": predicted.stage1,
            "stage 2": predicted.stage2,
            "final": predicted.final,
        }
    )
    only_errors = st.toggle("Only misclassified rows")
    if only_errors:
        audit = audit[audit["actual"] != audit["final"]]
    st.dataframe(audit.head(1000), use_container_width=True)
    st.caption(f"Showing {min(len(audit), 1000)} of {len(audit)} rows")
