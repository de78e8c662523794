import os

os.environ.setdefault("DPBUDGETER_TEST_MODES", "1")

import csv
import random
from pathlib import Path

import pytest

SEX = ["male", "female"]
EDUCATION = ["none", "highschool", "college", "graduate"]
RACE = ["white", "black", "asian", "hispanic", "other"]
MARITAL = ["married", "single", "divorced", "widowed"]


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> Path:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def make_survey_rows(n: int, seed: int = 20260808, missing_rate: float = 0.01) -> list[list[str]]:
    """Toy survey sample: age, sex, income, education, race, marital."""
    rnd = random.Random(seed)
    rows = []
    for _ in range(n):
        row = [
            str(rnd.randint(18, 90)),
            rnd.choice(SEX),
            str(int(rnd.lognormvariate(10.5, 0.6))),
            rnd.choice(EDUCATION),
            rnd.choice(RACE),
            rnd.choice(MARITAL),
        ]
        if rnd.random() < missing_rate:
            row[rnd.randrange(len(row))] = rnd.choice(["", "NA"])
        rows.append(row)
    return rows


SURVEY_HEADER = ["age", "sex", "income", "education", "race", "marital"]


@pytest.fixture(scope="session")
def survey_csv(tmp_path_factory) -> Path:
    path = tmp_path_factory.mktemp("data") / "survey.csv"
    return write_csv(path, SURVEY_HEADER, make_survey_rows(1000))


@pytest.fixture
def tiny_csv(tmp_path) -> Path:
    rows = [
        ["25", "male", "red"],
        ["31", "female", "blue"],
        ["47", "female", "red"],
        ["160", "male", "green"],
        ["NA", "male", ""],
    ]
    return write_csv(tmp_path / "tiny.csv", ["age", "sex", "color"], rows)
