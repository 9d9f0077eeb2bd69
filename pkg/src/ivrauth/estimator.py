"""Empirical probability and correlation estimates over a call log.

All estimates are raw counts (no smoothing). "Pass rate" denominators are
over all records, so a Missing outcome counts against passing: an unavailable
credential cannot be passed, and the pass / fail-or-null split partitions
every record. Undefined statistics (0/0) surface as None, never NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import DataError, EmptyDatasetError
from .model import ClassConditional, CredentialId, Dataset


class NullPolicy(str, Enum):
    """How correlation treats Missing cells.

    PAIRWISE_DELETE keeps only records where both credentials are available;
    NULL_AS_FAIL codes Missing as a failed check.
    """

    PAIRWISE_DELETE = "pairwise_delete"
    NULL_AS_FAIL = "null_as_fail"


@dataclass(frozen=True)
class CredentialStats:
    """Per-credential empirical rates.

    fraud_rate_given_pass is None when the credential has no passers.
    pass_rate_overall + fail_or_null_rate is exactly 1.0.
    """

    pass_rate_overall: float
    fail_or_null_rate: float
    fraud_rate_given_pass: float | None
    missing_count: int
    class_conditional: ClassConditional


@dataclass(frozen=True)
class CorrelationMatrix:
    """Pairwise Pearson correlations of 0/1 pass indicators.

    Cells where either column has zero variance under the null policy are
    undefined; `defined` marks them and `get` returns None there. `support`
    holds the per-cell record count the correlation was computed from.
    """

    credentials: tuple[CredentialId, ...]
    values: np.ndarray
    defined: np.ndarray
    support: np.ndarray
    policy: NullPolicy

    def get(self, c1: CredentialId, c2: CredentialId) -> float | None:
        i = self.credentials.index(c1)
        j = self.credentials.index(c2)
        if not self.defined[i, j]:
            return None
        return float(self.values[i, j])

    def to_json_dict(self) -> dict:
        k = len(self.credentials)
        rows = [
            [float(self.values[i, j]) if self.defined[i, j] else None for j in range(k)]
            for i in range(k)
        ]
        return {
            "policy": self.policy.value,
            "credentials": list(self.credentials),
            "matrix": rows,
            "support": self.support.astype(int).tolist(),
        }


def credential_stats(d: Dataset) -> dict[CredentialId, CredentialStats]:
    """Empirical pass rates, fraud-rate-given-pass and class conditionals.

    Class conditionals count Missing and Fail alike as not-Pass, matching the
    overall pass / fail-or-null partition.
    """
    if d.n_total == 0:
        raise EmptyDatasetError("empty dataset")
    pass_count, fraud_pass, missing_count = kernels.per_credential_counts(d.codes, d.fraud)
    n = d.n_total
    n_fraud = d.n_fraud
    n_legit = n - n_fraud
    out: dict[CredentialId, CredentialStats] = {}
    for j, name in enumerate(d.schema):
        np_j = int(pass_count[j])
        fp_j = int(fraud_pass[j])
        lp_j = np_j - fp_j
        pass_rate = np_j / n
        out[name] = CredentialStats(
            pass_rate_overall=pass_rate,
            fail_or_null_rate=1.0 - pass_rate,
            fraud_rate_given_pass=(fp_j / np_j) if np_j else None,
            missing_count=int(missing_count[j]),
            class_conditional=ClassConditional(
                p_pass_given_fraud=(fp_j / n_fraud) if n_fraud else 0.0,
                p_pass_given_legit=(lp_j / n_legit) if n_legit else 0.0,
                support_fraud=n_fraud,
                support_legit=n_legit,
            ),
        )
    return out


def missingness_profile(d: Dataset) -> dict[CredentialId, int]:
    """Exact count of Missing outcomes per credential."""
    missing = (d.codes == 2).sum(axis=0, dtype=np.int64)
    return {name: int(missing[j]) for j, name in enumerate(d.schema)}


def correlation_matrix(
    d: Dataset, null_policy: NullPolicy = NullPolicy.PAIRWISE_DELETE
) -> CorrelationMatrix:
    """Pairwise Pearson correlation of pass indicators under a null policy.

    Computed from exact integer joint counts, so the result is independent of
    record order. Cells with support < 2 or zero variance are undefined.
    """
    if d.n_total < 2:
        raise DataError("correlation requires at least 2 records")
    null_policy = NullPolicy(null_policy)
    k = len(d.schema)
    values = np.zeros((k, k), dtype=np.float64)
    defined = np.zeros((k, k), dtype=bool)
    support = np.zeros((k, k), dtype=np.int64)
    pairwise = null_policy is NullPolicy.PAIRWISE_DELETE
    for i in range(k):
        for j in range(i, k):
            n, sx, sy, sxy = kernels.corr_counts(d.codes, i, j, pairwise)
            support[i, j] = support[j, i] = n
            if n < 2:
                continue
            # scaled covariance terms stay integral (exact in Python ints):
            # n*sxy - sx*sy over sqrt((n*sx - sx^2)(n*sy - sy^2))
            vx = n * sx - sx * sx
            vy = n * sy - sy * sy
            if vx == 0 or vy == 0:
                continue
            num = n * sxy - sx * sy
            if num * num == vx * vy:  # perfect (anti)correlation, incl. diagonal
                r = 1.0 if num > 0 else -1.0
            else:
                r = num / math.sqrt(vx) / math.sqrt(vy)
            values[i, j] = values[j, i] = min(1.0, max(-1.0, r))
            defined[i, j] = defined[j, i] = True
    return CorrelationMatrix(
        credentials=d.schema,
        values=values,
        defined=defined,
        support=support,
        policy=null_policy,
    )
