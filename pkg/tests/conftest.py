from __future__ import annotations

import numpy as np
import pytest

from ivrauth.model import CallRecord, Dataset, Outcome
from ivrauth.synthgen import default_spec, generate

P, F, M = Outcome.PASS, Outcome.FAIL, Outcome.MISSING


def dataset_from_rows(schema, rows):
    """rows: list of (outcomes tuple in schema order, is_fraud)."""
    records = [
        CallRecord(outcomes=dict(zip(schema, outcomes)), is_fraud=fraud)
        for outcomes, fraud in rows
    ]
    return Dataset.from_records(schema, records)


def random_dataset(rng: np.random.Generator, max_creds=4, max_records=32, min_records=1):
    k = int(rng.integers(1, max_creds + 1))
    n = int(rng.integers(min_records, max_records + 1))
    schema = [chr(ord("A") + i) for i in range(k)]
    codes = rng.integers(0, 3, size=(n, k)).astype(np.int8)
    fraud = rng.random(n) < rng.uniform(0.05, 0.6)
    return Dataset(schema, codes, fraud)


@pytest.fixture(scope="session")
def default_dataset():
    """The built-in profile at its native 5000 rows (exactly 194 fraud)."""
    return generate(default_spec())


@pytest.fixture(scope="session")
def big_dataset():
    """200k-row draw of the built-in profile for statistical checks."""
    return generate(default_spec().with_n_total(200_000).with_seed(12345))


@pytest.fixture
def toy4():
    """One credential, four records: Pass/fraud, Pass/legit, Fail/legit,
    Missing/legit."""
    return dataset_from_rows(
        ["c"],
        [((P,), True), ((P,), False), ((F,), False), ((M,), False)],
    )


@pytest.fixture
def hand8():
    """Two credentials, eight records, mixed outcomes; used against the
    brute-force oracles."""
    return dataset_from_rows(
        ["A", "B"],
        [
            ((P, P), False),
            ((P, F), False),
            ((P, M), False),
            ((F, P), False),
            ((P, P), True),
            ((F, F), True),
            ((M, P), False),
            ((P, F), True),
        ],
    )


@pytest.fixture
def hand10():
    """Two credentials, ten records; pair-gate metrics checked by hand."""
    return dataset_from_rows(
        ["A", "B"],
        [
            ((P, P), False),
            ((P, P), False),
            ((P, P), False),
            ((P, F), False),
            ((F, P), False),
            ((M, P), False),
            ((P, M), False),
            ((P, P), True),
            ((F, P), True),
            ((P, F), True),
        ],
    )
