"""Independent brute-force oracles.

These work record-by-record on the CallRecord view, never touching the array
kernels or any production counting path, so they can referee the production
implementations. Deliberately simple and slow.
"""

from __future__ import annotations

import math

from ivrauth.model import CallRecord, Dataset, Outcome


def records_of(d: Dataset) -> list[CallRecord]:
    return d.records


def oracle_prior(records: list[CallRecord]) -> float:
    return sum(1 for r in records if r.is_fraud) / len(records)


def _matches(record: CallRecord, evidence: list[tuple[str, Outcome]]) -> bool:
    for cred, wanted in evidence:
        actual = record.outcomes[cred]
        if wanted == Outcome.PASS:
            if actual != Outcome.PASS:
                return False
        else:  # Fail evidence matches Fail-or-Missing
            if actual == Outcome.PASS:
                return False
    return True


def oracle_joint_counts(
    records: list[CallRecord], evidence: list[tuple[str, Outcome]]
) -> tuple[int, int]:
    """(records matching all evidence, fraud records among them)."""
    total = 0
    fraud = 0
    for r in records:
        if _matches(r, evidence):
            total += 1
            if r.is_fraud:
                fraud += 1
    return total, fraud


def oracle_joint_posterior(
    records: list[CallRecord], evidence: list[tuple[str, Outcome]]
) -> float | None:
    total, fraud = oracle_joint_counts(records, evidence)
    if total == 0:
        return None
    return fraud / total


def oracle_naive_posterior(
    records: list[CallRecord], evidence: list[tuple[str, Outcome]]
) -> float | None:
    """Fold single-credential class-conditional updates from the prior.

    Returns None when the evidence has probability zero under both classes.
    """
    n_fraud = sum(1 for r in records if r.is_fraud)
    n_legit = len(records) - n_fraud
    p = n_fraud / len(records)
    for cred, wanted in evidence:
        pf = (
            sum(1 for r in records if r.is_fraud and r.outcomes[cred] == Outcome.PASS) / n_fraud
            if n_fraud
            else 0.0
        )
        pl = (
            sum(1 for r in records if not r.is_fraud and r.outcomes[cred] == Outcome.PASS)
            / n_legit
            if n_legit
            else 0.0
        )
        lf = pf if wanted == Outcome.PASS else 1.0 - pf
        ll = pl if wanted == Outcome.PASS else 1.0 - pl
        den = lf * p + ll * (1.0 - p)
        if den == 0.0:
            return None
        p = lf * p / den
    return p


def oracle_credential_stats(records: list[CallRecord], cred: str) -> dict:
    n = len(records)
    n_pass = sum(1 for r in records if r.outcomes[cred] == Outcome.PASS)
    n_fraud_pass = sum(
        1 for r in records if r.is_fraud and r.outcomes[cred] == Outcome.PASS
    )
    n_fraud = sum(1 for r in records if r.is_fraud)
    n_legit = n - n_fraud
    n_legit_pass = n_pass - n_fraud_pass
    return {
        "pass_rate_overall": n_pass / n,
        "fail_or_null_rate": 1.0 - n_pass / n,
        "fraud_rate_given_pass": (n_fraud_pass / n_pass) if n_pass else None,
        "missing_count": sum(1 for r in records if r.outcomes[cred] == Outcome.MISSING),
        "p_pass_given_fraud": (n_fraud_pass / n_fraud) if n_fraud else 0.0,
        "p_pass_given_legit": (n_legit_pass / n_legit) if n_legit else 0.0,
    }


def oracle_pearson(
    records: list[CallRecord], c1: str, c2: str, pairwise_delete: bool
) -> float | None:
    """Textbook Pearson correlation of the two 0/1 pass indicators."""
    xs = []
    ys = []
    for r in records:
        o1 = r.outcomes[c1]
        o2 = r.outcomes[c2]
        if pairwise_delete and (o1 == Outcome.MISSING or o2 == Outcome.MISSING):
            continue
        xs.append(1.0 if o1 == Outcome.PASS else 0.0)
        ys.append(1.0 if o2 == Outcome.PASS else 0.0)
    n = len(xs)
    if n < 2:
        return None
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    if sxx == 0.0 or syy == 0.0:
        return None
    return sxy / math.sqrt(sxx * syy)


def oracle_pair_metrics(records: list[CallRecord], c1: str, c2: str) -> dict:
    """Exhaustive counts for the pass-both gate on a credential pair."""
    n = len(records)
    n_fraud = sum(1 for r in records if r.is_fraud)
    n_legit = n - n_fraud
    both = [
        r
        for r in records
        if r.outcomes[c1] == Outcome.PASS and r.outcomes[c2] == Outcome.PASS
    ]
    fraud_both = sum(1 for r in both if r.is_fraud)
    legit_both = len(both) - fraud_both
    tpr = (n_fraud - fraud_both) / n_fraud if n_fraud else 0.0
    fpr = (n_legit - legit_both) / n_legit if n_legit else 0.0
    return {
        "fraud_rate_given_both_pass": (fraud_both / len(both)) if both else None,
        "tpr": tpr,
        "fpr": fpr,
        "pass_both_rate": len(both) / n,
        "youden_j": tpr - fpr,
    }


def oracle_next_credential(
    records: list[CallRecord],
    schema: list[str],
    evidence: list[tuple[str, Outcome]],
    asked: set[str],
    min_support: int,
    fpr_step_cap: float | None = None,
) -> str | None:
    """Exhaustive greedy selection: minimize fraud share among records that
    match the evidence and also pass the candidate; ties by conditional
    legit-failure rate, then name."""
    best = None
    for cand in schema:
        if cand in asked:
            continue
        extended = evidence + [(cand, Outcome.PASS)]
        total, fraud = oracle_joint_counts(records, extended)
        if total < min_support:
            continue
        posterior = fraud / total
        base = [r for r in records if _matches(r, evidence)]
        legit = [r for r in base if not r.is_fraud]
        if legit:
            legit_fail = sum(
                1 for r in legit if r.outcomes[cand] != Outcome.PASS
            ) / len(legit)
        else:
            legit_fail = 1.0
        if fpr_step_cap is not None and legit_fail > fpr_step_cap:
            continue
        key = (posterior, legit_fail, cand)
        if best is None or key < best:
            best = key
    return best[2] if best else None
