"""Two-credential gates: metrics for every pair and deterministic ranking.

The gate blocks a record unless both outcomes are Pass; Fail or Missing on
either side blocks. Metrics come from exact counting.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations

import numpy as np

from . import kernels
from .errors import DataError, DegeneratePairError, EmptyDatasetError
from .model import CredentialId, Dataset


class RankObjective(str, Enum):
    MIN_POSTERIOR = "min-posterior"
    MAX_YOUDEN = "max-youden"
    MAX_TPR_UNDER_FPR_CAP = "max-tpr"


@dataclass(frozen=True)
class PairReport:
    """Metrics of one pass-both gate.

    tpr is the fraud block rate, fpr the legit block rate; both are defined
    as 0.0 when their class has no records so youden_j = tpr - fpr stays
    total. fraud_rate_given_both_pass is None when nobody passes both.
    """

    pair: tuple[CredentialId, CredentialId]
    fraud_rate_given_both_pass: float | None
    tpr: float
    fpr: float
    pass_both_rate: float
    youden_j: float

    def to_json_dict(self) -> dict:
        return {
            "pair": list(self.pair),
            "fraud_rate_given_both_pass": self.fraud_rate_given_both_pass,
            "tpr": self.tpr,
            "fpr": self.fpr,
            "pass_both_rate": self.pass_both_rate,
            "youden_j": self.youden_j,
        }


def evaluate_pair(d: Dataset, c1: CredentialId, c2: CredentialId) -> PairReport:
    """Exact metrics for the gate requiring both credentials to pass."""
    if c1 == c2:
        raise DegeneratePairError(f"degenerate pair: {c1!r} twice")
    if d.n_total == 0:
        raise EmptyDatasetError("empty dataset")
    i = d.credential_index(c1)
    j = d.credential_index(c2)
    cred_idx = np.asarray([i, j], dtype=np.int64)
    want_pass = np.asarray([True, True], dtype=bool)
    mask = kernels.match_mask(d.codes, cred_idx, want_pass)
    n_both, n_fraud_both = kernels.count_mask(mask, d.fraud)
    n = d.n_total
    n_fraud = d.n_fraud
    n_legit = n - n_fraud
    n_legit_both = n_both - n_fraud_both
    tpr = (n_fraud - n_fraud_both) / n_fraud if n_fraud else 0.0
    fpr = (n_legit - n_legit_both) / n_legit if n_legit else 0.0
    return PairReport(
        pair=(c1, c2),
        fraud_rate_given_both_pass=(n_fraud_both / n_both) if n_both else None,
        tpr=tpr,
        fpr=fpr,
        pass_both_rate=n_both / n,
        youden_j=tpr - fpr,
    )


def rank_pairs(
    d: Dataset,
    objective: RankObjective = RankObjective.MIN_POSTERIOR,
    fpr_cap: float | None = None,
) -> list[PairReport]:
    """All C(n, 2) pair reports, sorted by the objective.

    MIN_POSTERIOR sorts ascending by fraud rate among both-passers, undefined
    last (a gate nobody passes carries no confidence-after-pass signal);
    MAX_YOUDEN sorts descending by Youden's J; MAX_TPR_UNDER_FPR_CAP drops
    pairs with fpr above the cap and sorts descending by tpr. All objectives
    break ties by lower fpr, then by pair name, so output is deterministic.
    """
    objective = RankObjective(objective)
    if len(d.schema) < 2:
        raise DataError("ranking requires at least 2 credentials in the schema")
    reports = [evaluate_pair(d, c1, c2) for c1, c2 in combinations(d.schema, 2)]

    def name_key(r: PairReport) -> tuple[str, str]:
        return (r.pair[0], r.pair[1])

    if objective is RankObjective.MIN_POSTERIOR:
        reports.sort(
            key=lambda r: (
                r.fraud_rate_given_both_pass is None,
                r.fraud_rate_given_both_pass if r.fraud_rate_given_both_pass is not None else 0.0,
                r.fpr,
                name_key(r),
            )
        )
    elif objective is RankObjective.MAX_YOUDEN:
        reports.sort(key=lambda r: (-r.youden_j, r.fpr, name_key(r)))
    else:
        cap = 1.0 if fpr_cap is None else float(fpr_cap)
        reports = [r for r in reports if r.fpr <= cap]
        reports.sort(key=lambda r: (-r.tpr, r.fpr, name_key(r)))
    return reports
