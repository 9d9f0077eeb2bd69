from __future__ import annotations

import numpy as np
import pytest

from ivrauth.errors import EmptyDatasetError, SchemaError
from ivrauth.model import CallRecord, Dataset, Outcome, prior_fraud

from conftest import dataset_from_rows, random_dataset, F, M, P


def test_prior_fraud_reference_scale():
    codes = np.ones((5000, 1), dtype=np.int8)
    fraud = np.zeros(5000, dtype=bool)
    fraud[:194] = True
    d = Dataset(["A"], codes, fraud)
    assert prior_fraud(d) == 194 / 5000
    assert prior_fraud(d) == pytest.approx(0.0388, abs=1e-12)


def test_prior_fraud_no_fraud():
    d = Dataset(["A"], np.ones((10, 1), dtype=np.int8), np.zeros(10, dtype=bool))
    assert prior_fraud(d) == 0.0


def test_prior_fraud_hand_count():
    d = dataset_from_rows(
        ["A"],
        [((P,), True), ((P,), True), ((F,), False), ((M,), False), ((P,), False), ((F,), False)],
    )
    assert prior_fraud(d) == pytest.approx(2 / 6, abs=1e-15)


def test_prior_fraud_empty_dataset():
    d = Dataset(["A"], np.empty((0, 1), dtype=np.int8), np.empty(0, dtype=bool))
    with pytest.raises(EmptyDatasetError):
        prior_fraud(d)


def test_prior_invariant_under_permutation():
    rng = np.random.default_rng(5)
    d = random_dataset(rng, max_records=30, min_records=5)
    perm = rng.permutation(d.n_total)
    shuffled = Dataset(d.schema, d.codes[perm], d.fraud[perm])
    assert prior_fraud(shuffled) == prior_fraud(d)


def test_record_round_trip_identity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        d = random_dataset(rng)
        rebuilt = Dataset.from_records(d.schema, d.records)
        assert rebuilt == d
        assert rebuilt.n_total == d.n_total
        for a, b in zip(d.iter_records(), rebuilt.iter_records()):
            assert a == b


def test_outcomes_must_cover_schema():
    with pytest.raises(SchemaError):
        Dataset.from_records(
            ["A", "B"], [CallRecord(outcomes={"A": Outcome.PASS}, is_fraud=False)]
        )


def test_schema_validation():
    with pytest.raises(SchemaError):
        Dataset(["A", "A"], np.ones((1, 2), dtype=np.int8), np.zeros(1, dtype=bool))
    with pytest.raises(SchemaError):
        Dataset([""], np.ones((1, 1), dtype=np.int8), np.zeros(1, dtype=bool))
    with pytest.raises(SchemaError):
        Dataset(["is_fraud"], np.ones((1, 1), dtype=np.int8), np.zeros(1, dtype=bool))
    with pytest.raises(SchemaError):
        Dataset(["a,b"], np.ones((1, 1), dtype=np.int8), np.zeros(1, dtype=bool))


def test_bad_codes_rejected():
    with pytest.raises(SchemaError):
        Dataset(["A"], np.full((2, 1), 3, dtype=np.int8), np.zeros(2, dtype=bool))


def test_dataset_is_immutable():
    d = dataset_from_rows(["A"], [((P,), False)])
    with pytest.raises(ValueError):
        d.codes[0, 0] = 0
    with pytest.raises(ValueError):
        d.fraud[0] = True


def test_fingerprint_tracks_content():
    d1 = dataset_from_rows(["A"], [((P,), False), ((F,), True)])
    d2 = dataset_from_rows(["A"], [((P,), False), ((F,), True)])
    d3 = dataset_from_rows(["A"], [((P,), False), ((F,), False)])
    assert d1.fingerprint() == d2.fingerprint()
    assert d1.fingerprint() != d3.fingerprint()
    assert d1.fingerprint().startswith("sha256:")
