"""End-to-end CICIDS2017 reproduction: clean -> split -> train -> evaluate.

Run locally once the eight day CSVs are in data/cicids2017/ (or IDS_CICIDS_DIR):
    python -m scripts.reproduce_cicids2017

Every step goes through the same code paths as the CLI commands, and the
outputs land in runs/reproduction/ unless --out-dir says otherwise.
"""

import argparse
import glob
import logging
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(__file__)))

from src.cli import EXIT_OK, main as cli_main
from src.config import CICIDS_DIR, LOG_FORMAT, OUT_DIR, SEED
from src.metrics import check_acceptance, parse_report


def find_day_files(data_dir: str) -> list[str]:
    """The CICIDS2017 day files, in name order."""
    files = sorted(glob.glob(os.path.join(data_dir, "*.csv")))
    if not files:
        raise FileNotFoundError(f"No CSV files found in {data_dir}")
    return files


def run_step(name: str, argv: list[str]) -> None:
    print(f"\n{name}...")
    status = cli_main(argv)
    if status != EXIT_OK:
        print(f"  {name} failed with exit status {status}")
        sys.exit(status)


def reproduce(data_dir: str, out_dir: str, seed: int, threads: int | None) -> bool:
    files = find_day_files(data_dir)
    print(f"Found {len(files)} CSV files in {data_dir}")
    common = ["--seed", str(seed), "--out-dir", out_dir]
    if threads:
        common += ["--threads", str(threads)]

    run_step("Cleaning", ["clean", *files, *common])
    run_step("Splitting (table2 preset)", ["split", os.path.join(out_dir, "cleaned.csv"), "--split-preset", "table2", *common])
    run_step("Training the hierarchy", ["train", os.path.join(out_dir, "train.csv"), *common])
    run_step(
        "Evaluating",
        ["evaluate", os.path.join(out_dir, "hierarchy.json"), os.path.join(out_dir, "test.csv"), "--compare-published", *common],
    )

    with open(os.path.join(out_dir, "report.kv"), "r", encoding="utf-8") as f:
        report = parse_report(f.read())
    checks = check_acceptance(report)
    passed = sum(ok for _, ok in checks)
    print(f"\nDone! {passed}/{len(checks)} acceptance checks passed. Outputs in {out_dir}")
    return passed == len(checks)


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Reproduce the CICIDS2017 results end to end")
    parser.add_argument("--data-dir", default=CICIDS_DIR)
    parser.add_argument("--out-dir", default=os.path.join(OUT_DIR, "reproduction"))
    parser.add_argument("--seed", type=int, default=SEED)
    parser.add_argument("--threads", type=int)
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    sys.exit(0 if reproduce(args.data_dir, args.out_dir, args.seed, args.threads) else 1)
