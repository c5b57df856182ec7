"""Write a synthetic admissions table with schema and hierarchies.

The output directory can be fed straight to the CLI:

    python scripts/make_synthetic_cohort.py --rows 2000 --out /tmp/cohort
    recanon anonymize --data /tmp/cohort/data.csv --schema /tmp/cohort/schema.json \\
        --k 5 --l 2 --budget 0.02 --out /tmp/cohort/run
"""
from __future__ import annotations

import argparse
import csv
import json
import random
from pathlib import Path

SEXES = ["F", "M"]
# ward -> service line
WARDS = {"ICU": "critical", "CCU": "critical", "MED1": "medicine", "MED2": "medicine",
         "SURG": "surgery", "ORTH": "surgery", "OBS": "women", "GYN": "women"}
OUTCOMES = ["discharged", "transferred", "deceased"]
DX = ["sepsis", "pneumonia", "stroke", "mi", "fracture", "delivery", "copd", "renal"]


def age_levels():
    five = [[lo, lo + 5, f"{lo}-{lo + 4}"] for lo in range(0, 110, 5)]
    ten = [[lo, lo + 10, f"{lo}-{lo + 9}"] for lo in range(0, 110, 10)]
    bands = [[0, 20, "0-19"], [20, 70, "20-69"], [70, 110, "70+"]]
    return {"levels": [five, ten, bands]}


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--rows", type=int, default=1000)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--out", required=True)
    args = p.parse_args(argv)

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    (out / "age.json").write_text(json.dumps(age_levels(), indent=1) + "\n")
    (out / "sex.csv").write_text("".join(f"{s};person\n" for s in SEXES))
    (out / "ward.csv").write_text("".join(f"{w};{line}\n" for w, line in WARDS.items()))
    schema = {
        "format": "plaintext",
        "attributes": [
            {"name": "record_id", "data_type": "discrete", "role": "identifier"},
            {"name": "age", "data_type": "discrete", "role": "quasi_identifier", "hierarchy": "age.json"},
            {"name": "sex", "data_type": "nominal", "role": "quasi_identifier", "hierarchy": "sex.csv"},
            {"name": "ward", "data_type": "nominal", "role": "quasi_identifier", "hierarchy": "ward.csv"},
            {"name": "diagnosis", "data_type": "nominal", "role": "sensitive"},
            {"name": "outcome", "data_type": "ordinal", "role": "insensitive", "order": OUTCOMES},
        ],
    }
    (out / "schema.json").write_text(json.dumps(schema, indent=1) + "\n")

    wards = list(WARDS)
    with open(out / "data.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([a["name"] for a in schema["attributes"]])
        for i in range(args.rows):
            ward = rng.choice(wards)
            sex = "F" if ward in ("OBS", "GYN") else rng.choice(SEXES)
            age = min(109, max(0, int(rng.gauss(62, 18)))) if ward != "OBS" else rng.randint(16, 44)
            dx = "delivery" if ward == "OBS" else rng.choice(DX[:5] + DX[6:])
            outcome = rng.choices(OUTCOMES, [0.85, 0.1, 0.05])[0]
            w.writerow([100000 + i, age, sex, ward, dx, outcome])
    print(f"wrote {args.rows} rows to {out / 'data.csv'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
