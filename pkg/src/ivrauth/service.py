"""Stateless line-delimited JSON scoring service over a compiled policy.

One UTF-8 JSON object per line in, exactly one per line out, order-preserving
per connection. Requests carry the full evidence list every time, so the
service needs no session store and restarts are free; the IVR platform owns
session state.

Request:  {"session_id": str, "evidence": [{"credential": str,
           "outcome": "pass"|"fail"}, ...], "prior_override": float?}
Response: {"session_id": str, "posterior": float, "decision":
           "accept"|"block"|"continue", "next_credential": str|null,
           "policy_fingerprint": str}
Errors:   {"session_id": str|null, "error": code, "detail": str}

A malformed request yields an error line, never a dropped connection.
"""

from __future__ import annotations

import json
import signal
import socketserver
import sys
from typing import IO

from .errors import PolicyError
from .model import Outcome
from .sequencer import ACCEPT, ASK, BLOCK, Policy

CONTINUE = "continue"

_WIRE_OUTCOME = {"pass": Outcome.PASS, "fail": Outcome.FAIL}


class RequestError(Exception):
    """Validation failure for one request; maps to an error response line."""

    def __init__(self, code: str, detail: str, session_id: str | None = None):
        super().__init__(detail)
        self.code = code
        self.detail = detail
        self.session_id = session_id


def _adjusted_posterior(posterior: float, prior: float, override: float | None) -> float:
    """Rescale a compiled posterior to a caller-supplied prior via odds.

    Exact under class-conditional independence and the standard prior-shift
    correction otherwise. Degenerate priors (0 or 1) admit no rescale and the
    posterior is returned unchanged.
    """
    if override is None or override == prior:
        return posterior
    if posterior in (0.0, 1.0) or prior in (0.0, 1.0):
        return posterior
    if override == 0.0:
        return 0.0
    if override == 1.0:
        return 1.0
    odds = (posterior / (1.0 - posterior)) * (override / (1.0 - override)) / (
        prior / (1.0 - prior)
    )
    return odds / (1.0 + odds)


def _parse_request(line: str) -> tuple[str, list[tuple[str, Outcome]], float | None]:
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise RequestError("bad_request", f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise RequestError("bad_request", "request must be a JSON object")
    session_id = data.get("session_id")
    if not isinstance(session_id, str):
        raise RequestError("missing_field", "session_id must be a string")
    sid = session_id
    evidence_raw = data.get("evidence")
    if not isinstance(evidence_raw, list):
        raise RequestError("missing_field", "evidence must be a list", sid)
    evidence: list[tuple[str, Outcome]] = []
    seen: set[str] = set()
    for item in evidence_raw:
        if not isinstance(item, dict):
            raise RequestError("bad_request", "evidence items must be objects", sid)
        cred = item.get("credential")
        outcome = item.get("outcome")
        if not isinstance(cred, str) or not cred:
            raise RequestError("bad_request", "evidence item missing credential name", sid)
        if outcome not in _WIRE_OUTCOME:
            raise RequestError(
                "bad_outcome", f"outcome for {cred!r} must be 'pass' or 'fail'", sid
            )
        if cred in seen:
            raise RequestError(
                "duplicate_evidence", f"credential {cred!r} appears twice", sid
            )
        seen.add(cred)
        evidence.append((cred, _WIRE_OUTCOME[outcome]))
    override = data.get("prior_override")
    if override is not None:
        if not isinstance(override, (int, float)) or isinstance(override, bool):
            raise RequestError("bad_prior_override", "prior_override must be a number", sid)
        override = float(override)
        if not (0.0 <= override <= 1.0):
            raise RequestError("bad_prior_override", "prior_override must be in [0, 1]", sid)
    return session_id, evidence, override


def score_evidence(
    policy: Policy,
    evidence: list[tuple[str, Outcome]],
    prior_override: float | None = None,
) -> tuple[float, str, str | None]:
    """Walk the policy with the supplied evidence.

    Returns (posterior, decision, next_credential). Evidence for credentials
    the walk never asks is ignored; a walk that reaches an ask with no
    matching evidence reports 'continue' and names the credential to ask.
    """
    known = set(policy.schema)
    for cred, _ in evidence:
        if cred not in known:
            raise RequestError("unknown_credential", f"credential {cred!r} not in policy schema")
    ev_map = dict(evidence)
    node = policy.root
    while node.action == ASK and node.credential in ev_map:
        node = node.on_pass if ev_map[node.credential] == Outcome.PASS else node.on_fail
    posterior = _adjusted_posterior(node.belief, policy.prior, prior_override)
    t = policy.thresholds
    if posterior < t.accept_below:
        return posterior, ACCEPT, None
    if posterior > t.block_above:
        return posterior, BLOCK, None
    if node.action == ASK:
        return posterior, CONTINUE, node.credential
    return posterior, node.action, None


def handle_line(policy: Policy, line: str) -> str:
    """Process one request line into one response line (no newline)."""
    session_id: str | None = None
    try:
        session_id, evidence, override = _parse_request(line)
        posterior, decision, next_cred = score_evidence(policy, evidence, override)
        response = {
            "session_id": session_id,
            "posterior": posterior,
            "decision": decision,
            "next_credential": next_cred,
            "policy_fingerprint": policy.fingerprint,
        }
    except RequestError as exc:
        response = {
            "session_id": exc.session_id if exc.session_id is not None else session_id,
            "error": exc.code,
            "detail": exc.detail,
        }
    return json.dumps(response, sort_keys=True, separators=(",", ":"))


class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:  # one connection: sequential request lines
        policy = self.server.policy  # type: ignore[attr-defined]
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            out = handle_line(policy, line)
            self.wfile.write(out.encode("utf-8") + b"\n")
            self.wfile.flush()


class PolicyServer(socketserver.ThreadingTCPServer):
    """TCP server sharing one immutable Policy across connections."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address: tuple[str, int], policy: Policy):
        super().__init__(address, _Handler)
        self.policy = policy


def serve_tcp(policy: Policy, host: str, port: int) -> None:
    """Run until SIGINT/SIGTERM."""
    server = PolicyServer((host, port), policy)

    def _shutdown(signum, frame):  # noqa: ARG001
        raise KeyboardInterrupt

    signal.signal(signal.SIGTERM, _shutdown)
    bound = server.server_address
    print(f"listening on {bound[0]}:{bound[1]}", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


def serve_stdio(policy: Policy, stdin: IO[str] | None = None, stdout: IO[str] | None = None) -> None:
    """Line loop over standard streams; ends at EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        stdout.write(handle_line(policy, line) + "\n")
        stdout.flush()


def load_policy(path: str) -> Policy:
    """Load and validate a policy file; raises PolicyError with diagnostics."""
    try:
        return Policy.load(path)
    except FileNotFoundError as exc:
        raise PolicyError(f"policy file not found: {path}") from exc
