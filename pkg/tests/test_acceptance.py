"""Acceptance suite: one test per exit criterion, each printing a pass/fail
line (run with `pytest tests/test_acceptance.py -v -s` to see them).

Statistical criteria run against regenerated data from the built-in profile;
algebraic criteria are exact.
"""

from __future__ import annotations

import json
import subprocess
import sys
import time
from contextlib import contextmanager
from itertools import combinations

import numpy as np
import pytest

from ivrauth.bayes import PosteriorMode, bayes_update, sequential_posterior
from ivrauth.errors import InsufficientSupportError
from ivrauth.estimator import credential_stats
from ivrauth.model import Outcome, prior_fraud
from ivrauth.pairs import evaluate_pair, rank_pairs
from ivrauth.sequencer import (
    ACCEPT,
    ASK,
    BLOCK,
    REASON_THRESHOLD,
    Policy,
    Thresholds,
    compile_policy,
    next_credential,
    run_session,
)
from ivrauth.service import handle_line
from ivrauth.synthgen import DEFAULT_PROFILE

from conftest import random_dataset
from oracles import (
    oracle_joint_posterior,
    oracle_next_credential,
    oracle_pair_metrics,
)

P, F = Outcome.PASS, Outcome.FAIL


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except Exception:
        print(f"\n[FAIL] criterion {number}: {description}")
        raise
    print(f"\n[PASS] criterion {number}: {description}")


def _cli(*args: str) -> None:
    subprocess.run(
        [sys.executable, "-m", "ivrauth.cli", *args],
        check=True,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def cli_big_run(tmp_path_factory):
    """`gen` at n=200,000 followed by `stats`, through the real CLI."""
    root = tmp_path_factory.mktemp("acceptance")
    csv_path = root / "big.csv"
    stats_path = root / "stats.json"
    t0 = time.perf_counter()
    _cli("gen", "--defaults", "--n", "200000", "--seed", "12345",
         "--out", str(csv_path), "--output", str(root / "gen.json"))
    _cli("stats", "--input", str(csv_path), "--output", str(stats_path))
    elapsed = time.perf_counter() - t0
    return {
        "csv": csv_path,
        "stats": json.loads(stats_path.read_text()),
        "elapsed": elapsed,
    }


def test_criterion_1_bayes_count_identity():
    with criterion(1, "Bayes update over empirical estimates reproduces the "
                      "empirical fraud-rate-given-pass within 1e-12 (100 random "
                      "datasets, < 1 s)"):
        rng = np.random.default_rng(101)
        t0 = time.perf_counter()
        datasets = 0
        checked = 0
        while datasets < 100:
            d = random_dataset(rng, max_creds=4, max_records=32)
            datasets += 1
            prior = prior_fraud(d)
            for stats in credential_stats(d).values():
                if stats.fraud_rate_given_pass is None:
                    continue
                cc = stats.class_conditional
                via_bayes = bayes_update(prior, cc.p_pass_given_fraud, cc.p_pass_given_legit)
                assert abs(via_bayes - stats.fraud_rate_given_pass) < 1e-12
                checked += 1
        elapsed = time.perf_counter() - t0
        assert checked >= 100
        assert elapsed < 1.0, f"identity sweep took {elapsed:.3f}s"


def test_criterion_2_total_probability_identity(default_dataset, big_dataset):
    with criterion(2, "pass_rate = P(pass|F)*prior + P(pass|L)*(1-prior) within "
                      "1e-12 for every credential on every dataset"):
        rng = np.random.default_rng(102)
        pool = [random_dataset(rng, max_creds=4, max_records=32) for _ in range(100)]
        pool.extend([default_dataset, big_dataset])
        for d in pool:
            prior = prior_fraud(d)
            for stats in credential_stats(d).values():
                cc = stats.class_conditional
                mixture = cc.p_pass_given_fraud * prior + cc.p_pass_given_legit * (1 - prior)
                assert abs(mixture - stats.pass_rate_overall) < 1e-12


def test_criterion_3_profile_reproduction(cli_big_run):
    with criterion(3, "gen --defaults at n=200,000 then stats reproduces every "
                      "profile pass rate +-0.01, the prior +-0.002 and the (A,B) "
                      "correlation 0.87 +-0.03 in < 30 s"):
        assert cli_big_run["elapsed"] < 30.0, f"pipeline took {cli_big_run['elapsed']:.1f}s"
        report = cli_big_run["stats"]
        assert report["n_total"] == 200_000
        assert report["prior_fraud"] == pytest.approx(0.0388, abs=0.002)
        for name, (pass_rate, _, _) in DEFAULT_PROFILE.items():
            got = report["credentials"][name]["pass_rate_overall"]
            assert got == pytest.approx(pass_rate, abs=0.01), name
        creds = report["correlation"]["credentials"]
        ia, ib = creds.index("A"), creds.index("B")
        corr_ab = report["correlation"]["matrix"][ia][ib]
        assert report["correlation"]["policy"] == "pairwise_delete"
        assert corr_ab == pytest.approx(0.87, abs=0.03)


def test_criterion_4_pair_separation(big_dataset):
    with criterion(4, "regenerated data separates the correlated pair from the "
                      "independent pair >=3x (A,B > 0.035; A,E < 0.012) and "
                      "rank_pairs yields exactly 45 reports"):
        ab = sequential_posterior(big_dataset, [("A", P), ("B", P)]).posterior_fraud
        ae = sequential_posterior(big_dataset, [("A", P), ("E", P)]).posterior_fraud
        assert ab > 0.035
        assert ae < 0.012
        assert ab / ae >= 3.0
        assert len(rank_pairs(big_dataset)) == 45


def test_criterion_5_metric_algebra(big_dataset):
    with criterion(5, "youden_j = tpr - fpr within 1e-12 on all 45 pairs, "
                      "block/pass counts conserve n_total, and evaluate_pair "
                      "is symmetric"):
        reports = rank_pairs(big_dataset)
        assert len(reports) == 45
        n = big_dataset.n_total
        n_fraud = big_dataset.n_fraud
        for r in reports:
            assert abs(r.youden_j - (r.tpr - r.fpr)) < 1e-12
            both = r.pass_both_rate * n
            assert abs(both - round(both)) < 1e-6
            fraud_blocked = r.tpr * n_fraud
            assert abs(fraud_blocked - round(fraud_blocked)) < 1e-6
            fraud_passing = (
                0 if r.fraud_rate_given_both_pass is None
                else r.fraud_rate_given_both_pass * round(both)
            )
            assert round(fraud_passing) + round(fraud_blocked) == n_fraud
        for c1, c2 in [("A", "B"), ("C", "H"), ("E", "J")]:
            fwd = evaluate_pair(big_dataset, c1, c2)
            rev = evaluate_pair(big_dataset, c2, c1)
            assert (fwd.tpr, fwd.fpr, fwd.pass_both_rate, fwd.youden_j) == (
                rev.tpr, rev.fpr, rev.pass_both_rate, rev.youden_j
            )
            assert fwd.fraud_rate_given_both_pass == rev.fraud_rate_given_both_pass


def test_criterion_6_oracle_equivalence():
    with criterion(6, "evaluate_pair, sequential_posterior (empirical) and "
                      "next_credential agree exactly with brute-force oracles "
                      "on 50 random datasets"):
        rng = np.random.default_rng(106)
        datasets = 0
        while datasets < 50:
            d = random_dataset(rng, max_creds=4, max_records=32)
            datasets += 1
            records = d.records
            schema = list(d.schema)

            for c1, c2 in combinations(schema, 2):
                got = evaluate_pair(d, c1, c2)
                want = oracle_pair_metrics(records, c1, c2)
                assert got.fraud_rate_given_both_pass == want["fraud_rate_given_both_pass"]
                assert got.tpr == want["tpr"]
                assert got.fpr == want["fpr"]
                assert got.pass_both_rate == want["pass_both_rate"]
                assert got.youden_j == want["youden_j"]

            n_ev = int(rng.integers(1, len(schema) + 1))
            creds = list(rng.choice(schema, size=n_ev, replace=False))
            evidence = [(c, P if rng.random() < 0.5 else F) for c in creds]
            want_post = oracle_joint_posterior(records, evidence)
            if want_post is None:
                with pytest.raises(InsufficientSupportError):
                    sequential_posterior(d, evidence, min_support=1)
            else:
                got_post = sequential_posterior(d, evidence, min_support=1).posterior_fraud
                assert got_post == want_post

            if want_post is not None:
                asked = set(creds)
                belief = sequential_posterior(d, evidence, min_support=1)
                got_next = next_credential(d, belief, asked, Thresholds(), min_support=1)
                want_next = oracle_next_credential(records, schema, evidence, asked, 1)
                assert got_next == want_next


def test_criterion_7_sequencer_soundness(default_dataset):
    with criterion(7, "compiled trees satisfy the stopping rules, the depth cap "
                      "and no-repeat on every path, and compile twice to "
                      "byte-identical JSON"):
        rng = np.random.default_rng(107)
        cases = [
            (default_dataset, Thresholds(), PosteriorMode.EMPIRICAL_JOINT),
            (default_dataset, Thresholds(max_steps=6), PosteriorMode.EMPIRICAL_JOINT),
            (default_dataset, Thresholds(), PosteriorMode.NAIVE_INDEPENDENCE),
        ]
        for _ in range(10):
            d = random_dataset(rng, max_creds=4, max_records=32, min_records=4)
            cases.append(
                (d, Thresholds(accept_below=0.02, block_above=0.7, max_steps=3),
                 PosteriorMode.EMPIRICAL_JOINT)
            )
        for d, thresholds, mode in cases:
            policy = compile_policy(d, thresholds=thresholds, mode=mode, min_support=5)
            seen_paths = 0
            for node, asked, depth in policy.iter_nodes():
                assert depth <= thresholds.max_steps
                if node.action == ACCEPT:
                    assert node.belief < thresholds.accept_below
                elif node.action == BLOCK and node.reason == REASON_THRESHOLD:
                    assert node.belief > thresholds.block_above
                elif node.action == ASK:
                    assert node.credential not in asked
                    assert thresholds.accept_below <= node.belief <= thresholds.block_above
                    seen_paths += 1
            again = compile_policy(d, thresholds=thresholds, mode=mode, min_support=5)
            assert policy.to_json().encode() == again.to_json().encode()


def test_criterion_8_end_to_end_pipeline(tmp_path):
    with criterion(8, "gen -> policy build -> simulate at 5,000 rows finishes "
                      "in < 5 s with fraud_block_rate >= 0.95 and "
                      "legit_block_rate <= 0.65 at default thresholds"):
        csv_path = tmp_path / "train.csv"
        policy_path = tmp_path / "policy.json"
        report_path = tmp_path / "summary.json"
        t0 = time.perf_counter()
        _cli("gen", "--defaults", "--out", str(csv_path),
             "--output", str(tmp_path / "gen.json"))
        _cli("policy", "build", "--input", str(csv_path), "--out", str(policy_path),
             "--output", str(tmp_path / "build.json"))
        _cli("simulate", "--input", str(csv_path), "--policy", str(policy_path),
             "--output", str(report_path))
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"pipeline took {elapsed:.2f}s"
        summary = json.loads(report_path.read_text())
        assert summary["fraud_block_rate"] >= 0.95
        assert summary["legit_block_rate"] <= 0.65
        assert summary["n_accepted"] + summary["n_blocked"] == summary["n_total"]


def test_criterion_9_service_engine_equivalence(default_dataset, tmp_path):
    with criterion(9, "service responses equal run_session decisions and "
                      "posteriors exactly on 1,000 randomized evidence lists"):
        compiled = compile_policy(default_dataset)
        path = tmp_path / "policy.json"
        compiled.save(path)
        served = Policy.load(path)
        rng = np.random.default_rng(109)
        for _ in range(1000):
            outcomes = {
                c: (Outcome.PASS if rng.random() < 0.5 else Outcome.FAIL)
                for c in compiled.schema
            }
            result = run_session(compiled, lambda cred: outcomes[cred])
            evidence = [
                {"credential": c, "outcome": "pass" if o == Outcome.PASS else "fail"}
                for c, o in outcomes.items()
            ]
            request = json.dumps({"session_id": "eq", "evidence": evidence})
            response = json.loads(handle_line(served, request))
            assert response["decision"] == result.decision
            assert response["posterior"] == result.final_posterior
