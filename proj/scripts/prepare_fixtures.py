#!/usr/bin/env python3
"""Rebuild the bundled CSV fixtures under data/ from the original UCI files.

The UCI Adult and Statlog German Credit files ship inside the `responsibly`
wheel (pip download --no-deps responsibly). Pass the extracted package root:

    python3 scripts/prepare_fixtures.py /path/to/responsibly/dataset data/
"""
import csv
import random
import sys
from pathlib import Path

ADULT_COLUMNS = [
    "Age", "Workclass", "fnlwgt", "Education", "Education-Num", "MaritalStatus",
    "Occupation", "Relationship", "Race", "Sex", "CapitalGain", "CapitalLoss",
    "Hoursperweek", "Country", "income",
]

GERMAN_COLUMNS = [
    "existingchecking", "duration", "credithistory", "purpose", "creditamount",
    "savings", "employmentsince", "installmentrate", "statussex", "otherdebtors",
    "residencesince", "property", "age", "otherinstallmentplans", "housing",
    "existingcredits", "job", "peopleliable", "telephone", "foreignworker",
    "classification",
]

ADULT_SUBSAMPLE_ROWS = 5000
ADULT_SUBSAMPLE_SEED = 2020


def write(path, header, rows):
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def main(src, dst):
    src, dst = Path(src), Path(dst)
    adult = []
    for line in (src / "adult" / "adult.data").read_text().splitlines():
        if not line.strip():
            continue
        adult.append([c.strip() for c in line.split(",")])
    write(dst / "adult.csv", ADULT_COLUMNS, adult)

    picked = sorted(random.Random(ADULT_SUBSAMPLE_SEED).sample(range(len(adult)), ADULT_SUBSAMPLE_ROWS))
    write(dst / "adult_5k.csv", ADULT_COLUMNS, [adult[i] for i in picked])

    german = []
    for line in (src / "german" / "german.data").read_text().splitlines():
        if not line.strip():
            continue
        cells = line.split()
        cells[-1] = {"1": "good", "2": "bad"}[cells[-1]]
        german.append(cells)
    write(dst / "german.csv", GERMAN_COLUMNS, german)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
