import hashlib
import json
import os

from src.errors import InputError

FORMAT_VERSION = 1


def dump_document(kind: str, body: dict) -> str:
    """Render a model document as canonical JSON (sorted keys, exact floats)."""
    doc = {"format": f"flowstack.{kind}", "version": FORMAT_VERSION, **body}
    return json.dumps(doc, indent=1, sort_keys=True, allow_nan=False) + "\n"


def load_document(text: str, kind: str) -> dict:
    """Parse a document written by `dump_document` and check its header."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise InputError(f"Not a flowstack {kind} file: {e}") from e

    if doc.get("format") != f"flowstack.{kind}":
        raise InputError(f"Expected a flowstack.{kind} document, found {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise InputError(f"Unsupported {kind} format version {doc.get('version')!r}")
    return doc


def write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(text)


def read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return f.read()
    except OSError as e:
        raise InputError(f"Cannot read {path}: {e}") from e


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
