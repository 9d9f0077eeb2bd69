"""Adaptive credential-ordering policies.

compile_policy expands a decision tree breadth-first from the empty-evidence
root: stopping thresholds first (accept below the safety threshold, block
above the risk threshold), otherwise greedily ask the unasked credential
whose posterior-if-passed is lowest. Fail outcomes update belief with the
fail-or-missing semantics of the Bayes engine. Beliefs are empirical joint
counts while the conditioning subset keeps enough support; a node whose
subset falls under the floor switches to naive independence updates
(incrementally, from the belief already accumulated) and its subtree stays
naive. Exhaustion in the continue band (no eligible candidate, or the depth
cap) terminates with a conservative Block.

Compilation is deterministic: same dataset, thresholds and mode produce a
byte-identical serialized policy.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from .bayes import DEFAULT_MIN_SUPPORT, Belief, PosteriorMode, bayes_update
from .errors import DataError, EmptyDatasetError, ImpossibleEvidenceError, PolicyError
from .estimator import credential_stats
from .model import CredentialId, Dataset, Outcome, prior_fraud

ASK = "ask"
ACCEPT = "accept"
BLOCK = "block"

REASON_THRESHOLD = "threshold"
REASON_EXHAUSTED = "exhausted"
REASON_DEPTH = "depth"

POLICY_FORMAT = "ivrauth-policy/1"


class SelectionCriterion(str, Enum):
    """How the next credential is scored.

    POSTERIOR_IF_PASSED ranks candidates by the posterior reached when the
    candidate is passed (the default). EXPECTED_POSTERIOR weights both
    branches by their probability given the evidence; under exact empirical
    counting that expectation equals the current belief for every candidate
    (law of total expectation), so it degenerates to the tie-break chain
    (lower conditional legit-failure rate, then name). It exists as an
    explicit alternative, not a recommendation.
    """

    POSTERIOR_IF_PASSED = "posterior-if-passed"
    EXPECTED_POSTERIOR = "expected-posterior"


@dataclass(frozen=True)
class Thresholds:
    """Stopping rules and step budget for a compiled policy."""

    accept_below: float = 0.001
    block_above: float = 0.5
    max_steps: int = 4
    fpr_step_cap: float | None = None

    def __post_init__(self) -> None:
        if not (0.0 <= self.accept_below < self.block_above <= 1.0):
            raise DataError(
                "thresholds must satisfy 0 <= accept_below < block_above <= 1, "
                f"got accept_below={self.accept_below}, block_above={self.block_above}"
            )
        if self.max_steps < 1:
            raise DataError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.fpr_step_cap is not None and not (0.0 <= self.fpr_step_cap <= 1.0):
            raise DataError(f"fpr_step_cap must be in [0, 1], got {self.fpr_step_cap}")

    def to_json_dict(self) -> dict:
        return {
            "accept_below": self.accept_below,
            "block_above": self.block_above,
            "max_steps": self.max_steps,
            "fpr_step_cap": self.fpr_step_cap,
        }


@dataclass
class PolicyNode:
    """One decision point: the belief reached and what to do with it."""

    belief: float
    mode: PosteriorMode
    action: str
    credential: CredentialId | None = None
    reason: str | None = None
    fallback: bool = False
    on_pass: "PolicyNode | None" = None
    on_fail: "PolicyNode | None" = None

    def to_json_dict(self) -> dict:
        out: dict = {"belief": self.belief, "mode": self.mode.value, "action": self.action}
        if self.action == ASK:
            out["credential"] = self.credential
            if self.fallback:
                out["fallback"] = True
            out["on_pass"] = self.on_pass.to_json_dict()
            out["on_fail"] = self.on_fail.to_json_dict()
        else:
            out["reason"] = self.reason
        return out


@dataclass
class Policy:
    """Compiled decision tree plus the provenance needed to trust it."""

    schema: tuple[CredentialId, ...]
    prior: float
    thresholds: Thresholds
    mode: PosteriorMode
    min_support: int
    criterion: SelectionCriterion
    fingerprint: str
    root: PolicyNode = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "format": POLICY_FORMAT,
            "schema": list(self.schema),
            "prior": self.prior,
            "thresholds": self.thresholds.to_json_dict(),
            "mode": self.mode.value,
            "min_support": self.min_support,
            "criterion": self.criterion.value,
            "fingerprint": self.fingerprint,
            "root": self.root.to_json_dict(),
        }

    def to_json(self) -> str:
        """Canonical serialization: sorted keys, minimal separators, one
        trailing newline. Identical compiles yield identical bytes."""
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json_dict(cls, data: dict) -> "Policy":
        try:
            if data.get("format") != POLICY_FORMAT:
                raise PolicyError(f"unsupported policy format {data.get('format')!r}")
            thresholds = Thresholds(
                accept_below=float(data["thresholds"]["accept_below"]),
                block_above=float(data["thresholds"]["block_above"]),
                max_steps=int(data["thresholds"]["max_steps"]),
                fpr_step_cap=(
                    None
                    if data["thresholds"]["fpr_step_cap"] is None
                    else float(data["thresholds"]["fpr_step_cap"])
                ),
            )
            policy = cls(
                schema=tuple(data["schema"]),
                prior=float(data["prior"]),
                thresholds=thresholds,
                mode=PosteriorMode(data["mode"]),
                min_support=int(data["min_support"]),
                criterion=SelectionCriterion(data["criterion"]),
                fingerprint=str(data["fingerprint"]),
                root=_node_from_json(data["root"]),
            )
        except PolicyError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise PolicyError(f"malformed policy: {exc}") from exc
        policy.validate()
        return policy

    @classmethod
    def from_json(cls, text: str) -> "Policy":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PolicyError(f"policy is not valid JSON: {exc}") from exc
        return cls.from_json_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "Policy":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def validate(self) -> None:
        """Structural checks: actions, children, schema membership, depth cap
        and no credential repeats along any path."""
        known = set(self.schema)

        def walk(node: PolicyNode, asked: frozenset, depth: int) -> None:
            if not (0.0 <= node.belief <= 1.0):
                raise PolicyError(f"node belief {node.belief} outside [0, 1]")
            if node.action == ASK:
                if depth >= self.thresholds.max_steps:
                    raise PolicyError("ask node deeper than max_steps")
                if node.credential not in known:
                    raise PolicyError(f"ask node references unknown credential {node.credential!r}")
                if node.credential in asked:
                    raise PolicyError(f"credential {node.credential!r} repeats along a path")
                if node.on_pass is None or node.on_fail is None:
                    raise PolicyError("ask node missing a child")
                nxt = asked | {node.credential}
                walk(node.on_pass, nxt, depth + 1)
                walk(node.on_fail, nxt, depth + 1)
            elif node.action in (ACCEPT, BLOCK):
                if node.on_pass is not None or node.on_fail is not None:
                    raise PolicyError("terminal node has children")
            else:
                raise PolicyError(f"unknown action {node.action!r}")

        walk(self.root, frozenset(), 0)

    def iter_nodes(self):
        """Yield (node, asked_credentials, depth) over the whole tree."""
        stack = [(self.root, frozenset(), 0)]
        while stack:
            node, asked, depth = stack.pop()
            yield node, asked, depth
            if node.action == ASK:
                nxt = asked | {node.credential}
                stack.append((node.on_fail, nxt, depth + 1))
                stack.append((node.on_pass, nxt, depth + 1))


def _node_from_json(data: dict) -> PolicyNode:
    action = data["action"]
    node = PolicyNode(
        belief=float(data["belief"]),
        mode=PosteriorMode(data["mode"]),
        action=action,
        credential=data.get("credential"),
        reason=data.get("reason"),
        fallback=bool(data.get("fallback", False)),
    )
    if action == ASK:
        node.on_pass = _node_from_json(data["on_pass"])
        node.on_fail = _node_from_json(data["on_fail"])
    return node


# ---------------------------------------------------------------------------
# greedy candidate selection
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _Conditionals:
    prior: float
    p_pass_fraud: dict[CredentialId, float]
    p_pass_legit: dict[CredentialId, float]


def _conditionals(d: Dataset) -> _Conditionals:
    stats = credential_stats(d)
    return _Conditionals(
        prior=prior_fraud(d),
        p_pass_fraud={c: s.class_conditional.p_pass_given_fraud for c, s in stats.items()},
        p_pass_legit={c: s.class_conditional.p_pass_given_legit for c, s in stats.items()},
    )


def _select_empirical(
    d: Dataset,
    mask: np.ndarray,
    asked: frozenset,
    thresholds: Thresholds,
    min_support: int,
    criterion: SelectionCriterion,
) -> CredentialId | None:
    base_total, base_fraud = kernels.count_mask(mask, d.fraud)
    base_legit = base_total - base_fraud
    best = None
    for cand in d.schema:
        if cand in asked:
            continue
        child = kernels.refine_mask(d.codes, mask, d.credential_index(cand), True)
        total, fraud_n = kernels.count_mask(child, d.fraud)
        if total < min_support:
            continue
        post_pass = fraud_n / total
        legit_pass = total - fraud_n
        legit_fail = 1.0 - legit_pass / base_legit if base_legit else 1.0
        if thresholds.fpr_step_cap is not None and legit_fail > thresholds.fpr_step_cap:
            continue
        if criterion is SelectionCriterion.EXPECTED_POSTERIOR:
            # law of total expectation: the branch-weighted posterior equals
            # the current belief for every candidate, so the score is a
            # constant and the tie-break chain decides
            score = base_fraud / base_total if base_total else 0.0
        else:
            score = post_pass
        key = (score, legit_fail, cand)
        if best is None or key < best:
            best = key
    return best[2] if best else None


def _select_naive(
    d: Dataset,
    conds: _Conditionals,
    belief: float,
    asked: frozenset,
    thresholds: Thresholds,
    criterion: SelectionCriterion,
) -> CredentialId | None:
    best = None
    for cand in d.schema:
        if cand in asked:
            continue
        pf = conds.p_pass_fraud[cand]
        pl = conds.p_pass_legit[cand]
        try:
            post_pass = bayes_update(belief, pf, pl)
        except ImpossibleEvidenceError:
            continue  # nobody ever passes this credential; asking cannot clear anyone
        legit_fail = 1.0 - pl
        if thresholds.fpr_step_cap is not None and legit_fail > thresholds.fpr_step_cap:
            continue
        if criterion is SelectionCriterion.EXPECTED_POSTERIOR:
            score = belief  # constant across candidates; see class docstring
        else:
            score = post_pass
        key = (score, legit_fail, cand)
        if best is None or key < best:
            best = key
    return best[2] if best else None


def next_credential(
    d: Dataset,
    belief: Belief,
    asked: set[CredentialId] | frozenset,
    thresholds: Thresholds,
    min_support: int = DEFAULT_MIN_SUPPORT,
    criterion: SelectionCriterion = SelectionCriterion.POSTERIOR_IF_PASSED,
) -> CredentialId | None:
    """Greedy pick among unasked credentials, or None when no candidate
    remains eligible (exhausted schema, support floor, or the step cap)."""
    asked = frozenset(asked)
    for cred in asked:
        d.credential_index(cred)
    criterion = SelectionCriterion(criterion)
    if belief.mode is PosteriorMode.EMPIRICAL_JOINT:
        cred_idx = np.asarray(
            [d.credential_index(c) for c, _ in belief.evidence_trail], dtype=np.int64
        )
        want_pass = np.asarray(
            [o == Outcome.PASS for _, o in belief.evidence_trail], dtype=bool
        )
        mask = kernels.match_mask(d.codes, cred_idx, want_pass)
        return _select_empirical(d, mask, asked, thresholds, min_support, criterion)
    conds = _conditionals(d)
    return _select_naive(d, conds, belief.posterior_fraud, asked, thresholds, criterion)


# ---------------------------------------------------------------------------
# compilation
# ---------------------------------------------------------------------------

def compile_policy(
    d: Dataset,
    thresholds: Thresholds | None = None,
    mode: PosteriorMode = PosteriorMode.EMPIRICAL_JOINT,
    min_support: int = DEFAULT_MIN_SUPPORT,
    criterion: SelectionCriterion = SelectionCriterion.POSTERIOR_IF_PASSED,
) -> Policy:
    """Breadth-first compile of the adaptive policy tree from a training log.

    Naive fallback is per node: beliefs switch to incremental independence
    updates (from the belief already reached) once the empirical conditioning
    subset is smaller than min_support, and the whole subtree stays naive. An
    empirical node whose eligible candidates all lack support re-selects
    naively and is marked `fallback`.
    """
    if d.n_total == 0:
        raise EmptyDatasetError("empty dataset")
    thresholds = thresholds or Thresholds()
    mode = PosteriorMode(mode)
    criterion = SelectionCriterion(criterion)
    conds = _conditionals(d)
    prior = conds.prior

    root_mask = np.ones(d.n_total, dtype=bool)
    root = PolicyNode(belief=prior, mode=mode, action=ASK)
    # queue entries: (node, mask or None, asked, depth)
    queue: deque = deque()
    queue.append((root, root_mask if mode is PosteriorMode.EMPIRICAL_JOINT else None, frozenset(), 0))

    while queue:
        node, mask, asked, depth = queue.popleft()
        belief = node.belief

        if belief < thresholds.accept_below:
            _terminal(node, ACCEPT, REASON_THRESHOLD)
            continue
        if belief > thresholds.block_above:
            _terminal(node, BLOCK, REASON_THRESHOLD)
            continue
        if depth >= thresholds.max_steps:
            _terminal(node, BLOCK, REASON_DEPTH)
            continue

        selection_mode = node.mode
        cred = None
        if node.mode is PosteriorMode.EMPIRICAL_JOINT:
            cred = _select_empirical(d, mask, asked, thresholds, min_support, criterion)
            if cred is None and len(asked) < len(d.schema):
                cred = _select_naive(d, conds, belief, asked, thresholds, criterion)
                if cred is not None:
                    node.fallback = True
                    selection_mode = PosteriorMode.NAIVE_INDEPENDENCE
        else:
            cred = _select_naive(d, conds, belief, asked, thresholds, criterion)

        if cred is None:
            _terminal(node, BLOCK, REASON_EXHAUSTED)
            continue

        node.action = ASK
        node.credential = cred
        asked_next = asked | {cred}
        for outcome in (Outcome.PASS, Outcome.FAIL):
            child, child_mask = _make_child(
                d, conds, node, mask, cred, outcome, selection_mode, min_support
            )
            if outcome == Outcome.PASS:
                node.on_pass = child
            else:
                node.on_fail = child
            if child.action == ASK:  # still undecided; expansion continues
                queue.append((child, child_mask, asked_next, depth + 1))

    policy = Policy(
        schema=d.schema,
        prior=prior,
        thresholds=thresholds,
        mode=mode,
        min_support=min_support,
        criterion=criterion,
        fingerprint=d.fingerprint(),
        root=root,
    )
    policy.validate()
    return policy


def _terminal(node: PolicyNode, action: str, reason: str) -> None:
    node.action = action
    node.reason = reason
    node.credential = None
    node.on_pass = None
    node.on_fail = None


def _make_child(
    d: Dataset,
    conds: _Conditionals,
    parent: PolicyNode,
    mask: np.ndarray | None,
    cred: CredentialId,
    outcome: Outcome,
    selection_mode: PosteriorMode,
    min_support: int,
) -> tuple[PolicyNode, np.ndarray | None]:
    """Belief update for one branch; returns the child as a provisional ASK
    node (the queue decides its real action) plus its conditioning mask."""
    want_pass = outcome == Outcome.PASS
    if selection_mode is PosteriorMode.EMPIRICAL_JOINT:
        child_mask = kernels.refine_mask(d.codes, mask, d.credential_index(cred), want_pass)
        total, fraud_n = kernels.count_mask(child_mask, d.fraud)
        if total >= min_support:
            child = PolicyNode(
                belief=fraud_n / total, mode=PosteriorMode.EMPIRICAL_JOINT, action=ASK
            )
            return child, child_mask
        # support collapsed: fall back to an incremental naive update
    pf = conds.p_pass_fraud[cred]
    pl = conds.p_pass_legit[cred]
    lik_fraud = pf if want_pass else 1.0 - pf
    lik_legit = pl if want_pass else 1.0 - pl
    try:
        belief = bayes_update(parent.belief, lik_fraud, lik_legit)
    except ImpossibleEvidenceError:
        # branch impossible under both classes; keep the belief and block
        child = PolicyNode(
            belief=parent.belief,
            mode=PosteriorMode.NAIVE_INDEPENDENCE,
            action=BLOCK,
            reason=REASON_EXHAUSTED,
        )
        return child, None
    child = PolicyNode(belief=belief, mode=PosteriorMode.NAIVE_INDEPENDENCE, action=ASK)
    return child, None


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionResult:
    """Outcome of walking one caller through a policy."""

    decision: str
    steps_taken: int
    final_posterior: float
    trail: tuple[tuple[CredentialId, Outcome], ...]


def run_session(
    policy: Policy, oracle: Callable[[CredentialId], Outcome]
) -> SessionResult:
    """Walk the tree, querying the oracle at each ask; deterministic given
    the oracle's answers. The oracle must return Outcome.PASS or FAIL."""
    node = policy.root
    trail: list[tuple[CredentialId, Outcome]] = []
    while node.action == ASK:
        outcome = Outcome(oracle(node.credential))
        if outcome == Outcome.MISSING:
            raise DataError("session oracle must answer pass or fail")
        trail.append((node.credential, outcome))
        node = node.on_pass if outcome == Outcome.PASS else node.on_fail
    return SessionResult(
        decision=node.action,
        steps_taken=len(trail),
        final_posterior=node.belief,
        trail=tuple(trail),
    )


@dataclass(frozen=True)
class BacktestSummary:
    """Aggregate replay counts; rates are None on an empty denominator.

    Blocked calls are split by terminal reason so operators who route
    exhaustion blocks to a human (escalation) instead of hard-blocking can
    read their volume directly.
    """

    fraud_block_rate: float | None
    legit_block_rate: float | None
    mean_steps: float
    accept_fraud_rate: float | None
    n_total: int
    n_accepted: int
    n_blocked: int
    n_blocked_threshold: int
    n_blocked_exhausted: int

    def to_json_dict(self) -> dict:
        return {
            "fraud_block_rate": self.fraud_block_rate,
            "legit_block_rate": self.legit_block_rate,
            "mean_steps": self.mean_steps,
            "accept_fraud_rate": self.accept_fraud_rate,
            "n_total": self.n_total,
            "n_accepted": self.n_accepted,
            "n_blocked": self.n_blocked,
            "n_blocked_threshold": self.n_blocked_threshold,
            "n_blocked_exhausted": self.n_blocked_exhausted,
        }


def backtest(d_eval: Dataset, policy: Policy) -> BacktestSummary:
    """Replay every record through the policy using its recorded outcomes
    (Missing counts as Fail at ask time) and aggregate exact counts.

    Implemented by propagating record masks down the tree, which is
    equivalent to per-record run_session replay but vectorized.
    """
    for cred in policy.schema:
        d_eval.credential_index(cred)  # raises on any missing credential

    n = d_eval.n_total
    accepted_total = 0
    accepted_fraud = 0
    blocked_total = 0
    blocked_fraud = 0
    blocked_threshold = 0
    steps_weighted = 0

    stack: list[tuple[PolicyNode, np.ndarray, int]] = [
        (policy.root, np.ones(n, dtype=bool), 0)
    ]
    while stack:
        node, mask, depth = stack.pop()
        count, fraud_n = kernels.count_mask(mask, d_eval.fraud)
        if count == 0:
            continue
        if node.action == ASK:
            idx = d_eval.credential_index(node.credential)
            pass_mask = kernels.refine_mask(d_eval.codes, mask, idx, True)
            fail_mask = mask & ~pass_mask
            stack.append((node.on_fail, fail_mask, depth + 1))
            stack.append((node.on_pass, pass_mask, depth + 1))
        else:
            steps_weighted += depth * count
            if node.action == ACCEPT:
                accepted_total += count
                accepted_fraud += fraud_n
            else:
                blocked_total += count
                blocked_fraud += fraud_n
                if node.reason == REASON_THRESHOLD:
                    blocked_threshold += count

    n_fraud = d_eval.n_fraud
    n_legit = n - n_fraud
    blocked_legit = blocked_total - blocked_fraud
    return BacktestSummary(
        fraud_block_rate=(blocked_fraud / n_fraud) if n_fraud else None,
        legit_block_rate=(blocked_legit / n_legit) if n_legit else None,
        mean_steps=(steps_weighted / n) if n else 0.0,
        accept_fraud_rate=(accepted_fraud / accepted_total) if accepted_total else None,
        n_total=n,
        n_accepted=accepted_total,
        n_blocked=blocked_total,
        n_blocked_threshold=blocked_threshold,
        n_blocked_exhausted=blocked_total - blocked_threshold,
    )


def replay_oracle(d: Dataset, row: int) -> Callable[[CredentialId], Outcome]:
    """Oracle answering from one recorded call; Missing answers Fail."""

    def oracle(cred: CredentialId) -> Outcome:
        code = int(d.codes[row, d.credential_index(cred)])
        return Outcome.PASS if code == int(Outcome.PASS) else Outcome.FAIL

    return oracle
