"""Core domain types: credential outcomes, call records, datasets.

A Dataset is the shared input of every other module. Internally it is a
read-only int8 matrix of outcome codes (records x credentials) plus a boolean
fraud-label vector; the record-level view is materialized on demand.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import EmptyDatasetError, SchemaError

# A credential is an opaque named slot; ids are plain strings.
CredentialId = str

LABEL_COLUMN = "is_fraud"


class Outcome(IntEnum):
    """Tri-state result of one credential check.

    Missing is a first-class state: an unavailable credential is structural
    information, not an absent key.
    """

    FAIL = 0
    PASS = 1
    MISSING = 2


@dataclass(frozen=True)
class CallRecord:
    """One call: an outcome for every credential in the schema, plus label."""

    outcomes: Mapping[CredentialId, Outcome]
    is_fraud: bool


@dataclass(frozen=True)
class ClassConditional:
    """Per-credential pass likelihoods by caller class, with their supports.

    A zero-support class reports probability 0.0; the support count makes the
    lack of evidence explicit.
    """

    p_pass_given_fraud: float
    p_pass_given_legit: float
    support_fraud: int
    support_legit: int


def validate_schema(schema: Sequence[CredentialId]) -> tuple[CredentialId, ...]:
    """Check credential names: non-empty, unique, CSV-safe, not the label."""
    names = tuple(schema)
    seen = set()
    for name in names:
        if not isinstance(name, str) or not name:
            raise SchemaError(f"credential name must be a non-empty string, got {name!r}")
        if name == LABEL_COLUMN:
            raise SchemaError(f"credential name {LABEL_COLUMN!r} collides with the label column")
        if "," in name or "\n" in name or "\r" in name:
            raise SchemaError(f"credential name {name!r} contains a CSV delimiter")
        if name in seen:
            raise SchemaError(f"duplicate credential name {name!r}")
        seen.add(name)
    return names


class Dataset:
    """Immutable labelled call log over a fixed credential schema.

    Credential ordering in the schema is total and stable; it defines the
    legacy static prompt sequence and the canonical column order of the CSV
    interchange format.
    """

    __slots__ = ("schema", "codes", "fraud", "_index")

    def __init__(self, schema: Sequence[CredentialId], codes: np.ndarray, fraud: np.ndarray):
        self.schema = validate_schema(schema)
        codes = np.asarray(codes, dtype=np.int8)
        fraud = np.asarray(fraud, dtype=bool)
        if codes.ndim != 2 or codes.shape[1] != len(self.schema):
            raise SchemaError(
                f"outcome matrix shape {codes.shape} does not match schema of {len(self.schema)}"
            )
        if fraud.ndim != 1 or fraud.shape[0] != codes.shape[0]:
            raise SchemaError("fraud label vector length does not match record count")
        if codes.size and (codes.min() < 0 or codes.max() > 2):
            raise SchemaError("outcome codes must be 0 (fail), 1 (pass) or 2 (missing)")
        codes = codes.copy()
        fraud = fraud.copy()
        codes.setflags(write=False)
        fraud.setflags(write=False)
        self.codes = codes
        self.fraud = fraud
        self._index = {name: i for i, name in enumerate(self.schema)}

    # -- construction ---------------------------------------------------

    @classmethod
    def from_records(
        cls, schema: Sequence[CredentialId], records: Iterable[CallRecord]
    ) -> "Dataset":
        names = validate_schema(schema)
        rows = []
        fraud = []
        for rec in records:
            if set(rec.outcomes.keys()) != set(names):
                missing = set(names) - set(rec.outcomes.keys())
                extra = set(rec.outcomes.keys()) - set(names)
                raise SchemaError(
                    f"record outcomes do not cover the schema exactly "
                    f"(missing {sorted(missing)}, extra {sorted(extra)})"
                )
            rows.append([int(rec.outcomes[name]) for name in names])
            fraud.append(bool(rec.is_fraud))
        codes = np.asarray(rows, dtype=np.int8).reshape(len(rows), len(names))
        return cls(names, codes, np.asarray(fraud, dtype=bool))

    # -- basic properties -----------------------------------------------

    @property
    def n_total(self) -> int:
        return int(self.codes.shape[0])

    @property
    def n_fraud(self) -> int:
        return int(self.fraud.sum())

    def __len__(self) -> int:
        return self.n_total

    def credential_index(self, name: CredentialId) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SchemaError(f"unknown credential {name!r}") from None

    # -- record view ----------------------------------------------------

    def record(self, i: int) -> CallRecord:
        row = self.codes[i]
        return CallRecord(
            outcomes={name: Outcome(int(row[j])) for j, name in enumerate(self.schema)},
            is_fraud=bool(self.fraud[i]),
        )

    def iter_records(self) -> Iterator[CallRecord]:
        for i in range(self.n_total):
            yield self.record(i)

    @property
    def records(self) -> list[CallRecord]:
        return list(self.iter_records())

    # -- identity -------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.schema == other.schema
            and np.array_equal(self.codes, other.codes)
            and np.array_equal(self.fraud, other.fraud)
        )

    def __hash__(self) -> int:
        return hash((self.schema, self.codes.tobytes(), self.fraud.tobytes()))

    def fingerprint(self) -> str:
        """Stable content hash over schema, outcomes and labels."""
        h = hashlib.sha256()
        h.update("\x1f".join(self.schema).encode("utf-8"))
        h.update(b"\x1e")
        h.update(self.codes.tobytes())
        h.update(b"\x1e")
        h.update(np.packbits(self.fraud).tobytes())
        return "sha256:" + h.hexdigest()

    def __repr__(self) -> str:
        return (
            f"Dataset(credentials={len(self.schema)}, records={self.n_total}, "
            f"fraud={self.n_fraud})"
        )


def prior_fraud(d: Dataset) -> float:
    """Baseline fraud probability: labelled-fraud share of all records."""
    if d.n_total == 0:
        raise EmptyDatasetError("empty dataset")
    return d.n_fraud / d.n_total
