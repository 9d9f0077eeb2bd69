"""Posterior fraud probability: single-step updates and sequential evidence.

Two sequential modes:

* EMPIRICAL_JOINT counts records matching the whole evidence list directly;
  a Fail observation matches Fail-or-Missing records, mirroring the
  fail-or-null partition used by the estimator.
* NAIVE_INDEPENDENCE folds one Bayes update per evidence item using the
  per-credential class conditionals, treating outcomes as independent within
  each class.

All arithmetic is 64-bit floating point; at ten-credential scale no log-space
accumulation is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DataError, ImpossibleEvidenceError, InsufficientSupportError
from .estimator import credential_stats
from .model import CredentialId, Dataset, Outcome, prior_fraud

DEFAULT_MIN_SUPPORT = 30

Evidence = Sequence[tuple[CredentialId, Outcome]]


class PosteriorMode(str, Enum):
    EMPIRICAL_JOINT = "empirical"
    NAIVE_INDEPENDENCE = "naive"


@dataclass(frozen=True)
class Belief:
    """Posterior fraud probability with the evidence that produced it."""

    posterior_fraud: float
    evidence_trail: tuple[tuple[CredentialId, Outcome], ...]
    mode: PosteriorMode


def bayes_update(prior: float, lik_fraud: float, lik_legit: float) -> float:
    """One Bayes step: posterior fraud probability given one observation.

    lik_fraud and lik_legit are the class-conditional probabilities of the
    observation; the denominator is their prior-weighted mixture.
    """
    _check_prob("prior", prior)
    _check_prob("lik_fraud", lik_fraud)
    _check_prob("lik_legit", lik_legit)
    denominator = lik_fraud * prior + lik_legit * (1.0 - prior)
    if denominator == 0.0:
        raise ImpossibleEvidenceError(
            "impossible evidence: observation has probability 0 under both classes"
        )
    return lik_fraud * prior / denominator


def total_probability(prior: float, lik_fraud: float, lik_legit: float) -> float:
    """Mixture probability of the observation across the two caller classes."""
    _check_prob("prior", prior)
    _check_prob("lik_fraud", lik_fraud)
    _check_prob("lik_legit", lik_legit)
    return lik_fraud * prior + lik_legit * (1.0 - prior)


def _check_prob(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise DataError(f"{name} must be a probability in [0, 1], got {value!r}")


def _validate_evidence(d: Dataset, evidence: Evidence) -> list[tuple[CredentialId, Outcome]]:
    if not evidence:
        raise DataError("evidence must be non-empty")
    seen: set[CredentialId] = set()
    cleaned = []
    for cred, outcome in evidence:
        d.credential_index(cred)
        outcome = Outcome(outcome)
        if outcome == Outcome.MISSING:
            raise DataError(f"evidence outcome for {cred!r} must be pass or fail")
        if cred in seen:
            raise DataError(f"duplicate credential {cred!r} in evidence")
        seen.add(cred)
        cleaned.append((cred, outcome))
    return cleaned


def empirical_joint_counts(d: Dataset, evidence: Evidence) -> tuple[int, int]:
    """(records matching all evidence, fraud among them); Fail matches
    Fail-or-Missing."""
    cleaned = _validate_evidence(d, evidence)
    cred_idx = np.asarray([d.credential_index(c) for c, _ in cleaned], dtype=np.int64)
    want_pass = np.asarray([o == Outcome.PASS for _, o in cleaned], dtype=bool)
    mask = kernels.match_mask(d.codes, cred_idx, want_pass)
    return kernels.count_mask(mask, d.fraud)


def sequential_posterior(
    d: Dataset,
    evidence: Evidence,
    mode: PosteriorMode = PosteriorMode.EMPIRICAL_JOINT,
    min_support: int = DEFAULT_MIN_SUPPORT,
) -> Belief:
    """Posterior fraud probability after a list of credential observations.

    EMPIRICAL_JOINT raises InsufficientSupportError when fewer than
    min_support records match the evidence; the caller may retry in
    NAIVE_INDEPENDENCE mode.
    """
    mode = PosteriorMode(mode)
    cleaned = _validate_evidence(d, evidence)
    trail = tuple(cleaned)
    if mode is PosteriorMode.EMPIRICAL_JOINT:
        total, fraud = empirical_joint_counts(d, cleaned)
        if total < min_support:
            raise InsufficientSupportError(total, min_support)
        return Belief(posterior_fraud=fraud / total, evidence_trail=trail, mode=mode)

    stats = credential_stats(d)
    posterior = prior_fraud(d)
    for cred, outcome in cleaned:
        cc = stats[cred].class_conditional
        if outcome == Outcome.PASS:
            lik_fraud, lik_legit = cc.p_pass_given_fraud, cc.p_pass_given_legit
        else:
            lik_fraud, lik_legit = 1.0 - cc.p_pass_given_fraud, 1.0 - cc.p_pass_given_legit
        posterior = bayes_update(posterior, lik_fraud, lik_legit)
    return Belief(posterior_fraud=posterior, evidence_trail=trail, mode=mode)
