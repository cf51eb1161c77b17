"""Regenerates the synthetic dataset fixtures in this directory.

The files mimic the label vocabularies and class balance of two public
fact-checking benchmarks; the claims themselves are invented.

    python3 generate.py
"""
import json
import random

SUBJECTS = ["The city council", "A state senator", "The governor", "A county report",
            "The mayor", "A school board member", "The health department", "A campaign ad"]
PREDICATES = ["cut the budget by", "raised taxes by", "hired", "closed", "opened", "spent"]
OBJECTS = ["12 percent", "300 teachers", "four clinics", "two million dollars", "nine schools",
           "half of its parks"]


def claim(rng):
    return f"{rng.choice(SUBJECTS)} {rng.choice(PREDICATES)} {rng.choice(OBJECTS)} in {rng.randrange(1990, 2024)}."


def write(path, rows):
    with open(path, "w") as f:
        for row in rows:
            f.write(json.dumps(row, sort_keys=True) + "\n")


def liar_new(rng):
    # 48 "true"; 152 spread over the five non-true grades
    labels = ["true"] * 48 + ["mostly-true"] * 30 + ["half-true"] * 31 + ["barely-true"] * 29 \
        + ["false"] * 36 + ["pants-fire"] * 26
    rng.shuffle(labels)
    return [{"id": f"liar-{i:04d}", "claim": claim(rng), "label": label} for i, label in enumerate(labels)]


def averitec(rng):
    labels = ["Supported"] * 263 + ["Refuted"] * 650 \
        + ["Conflicting Evidence/Cherrypicking"] * 87 + ["Not Enough Evidence"] * 80
    rng.shuffle(labels)
    rows = []
    for i, label in enumerate(labels):
        c = claim(rng)
        rows.append({"id": f"avt-{i:04d}", "claim": c, "label": label,
                     "evidence": [f"Records about: {c}", f"Official statement {rng.randrange(1000)}."]})
    return rows


if __name__ == "__main__":
    write("liar_new_fixture.jsonl", liar_new(random.Random(5)))
    write("averitec_fixture.jsonl", averitec(random.Random(6)))
