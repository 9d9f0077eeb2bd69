"""Seedable generator of class-conditional correlated tri-state call logs.

Sampling model per record: draw the caller class from the fraud prior, draw a
latent multivariate normal with the spec's correlation matrix, threshold each
coordinate at the class's marginal quantile (Gaussian copula), then
independently blank cells to Missing with each credential's missing
probability.

The per-class marginal pass probabilities in the spec are *observed* targets,
i.e. they already include the dilution from missingness (a Missing cell
counts as not-passed). Generation therefore thresholds at p / (1 - p_missing)
so the post-blanking pass rate lands on the configured value; a target above
its availability bound (1 - p_missing) is rejected at validation.

Randomness comes from numpy's default_rng (PCG64), a named, portable,
seedable generator: one stream per generate() call, drawn in a fixed order
(class uniforms, latent normals, missing uniforms), so a given spec and seed
reproduce byte-identical datasets on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import SpecValidationError
from .model import CredentialId, Dataset, validate_schema

_CORR_CAP = 0.9995  # keep the latent matrix numerically non-degenerate
_THRESH_CAP = 8.3   # |z| beyond this is probability 0/1 at double precision


@dataclass(frozen=True)
class GeneratorSpec:
    """Full description of a synthetic call-log population.

    p_pass_given_fraud / p_pass_given_legit / p_missing map credential name
    to probability; latent_corr is the copula correlation matrix in schema
    order, shared across classes.
    """

    schema: tuple[CredentialId, ...]
    n_total: int
    fraud_prior: float
    p_pass_given_fraud: dict[CredentialId, float]
    p_pass_given_legit: dict[CredentialId, float]
    p_missing: dict[CredentialId, float]
    latent_corr: np.ndarray
    seed: int

    def validate(self) -> None:
        schema = validate_schema(self.schema)
        if self.n_total < 0:
            raise SpecValidationError(f"n_total must be non-negative, got {self.n_total}")
        _check_prob("fraud_prior", self.fraud_prior)
        for table_name, table in (
            ("p_pass_given_fraud", self.p_pass_given_fraud),
            ("p_pass_given_legit", self.p_pass_given_legit),
            ("p_missing", self.p_missing),
        ):
            if set(table.keys()) != set(schema):
                raise SpecValidationError(f"{table_name} must cover the schema exactly")
            for name, v in table.items():
                _check_prob(f"{table_name}[{name}]", v)
        for name in schema:
            avail = 1.0 - self.p_missing[name]
            for table_name, p in (
                ("p_pass_given_fraud", self.p_pass_given_fraud[name]),
                ("p_pass_given_legit", self.p_pass_given_legit[name]),
            ):
                if p > avail + 1e-12:
                    raise SpecValidationError(
                        f"{table_name}[{name}] = {p:.6g} exceeds availability "
                        f"1 - p_missing = {avail:.6g}"
                    )
        corr = np.asarray(self.latent_corr, dtype=np.float64)
        k = len(schema)
        if corr.shape != (k, k):
            raise SpecValidationError(
                f"latent_corr shape {corr.shape} does not match schema of {k}"
            )
        if not np.allclose(corr, corr.T, atol=1e-12):
            raise SpecValidationError("latent_corr must be symmetric")
        if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
            raise SpecValidationError("latent_corr must have a unit diagonal")
        eigenvalues = np.linalg.eigvalsh(corr)
        lam_min = float(eigenvalues[0])
        if lam_min < -1e-8:
            raise SpecValidationError(
                "latent correlation matrix is not positive semi-definite "
                f"(minimum eigenvalue {lam_min:.6g} is negative)"
            )

    def with_n_total(self, n: int) -> "GeneratorSpec":
        return replace(self, n_total=int(n))

    def with_seed(self, seed: int) -> "GeneratorSpec":
        return replace(self, seed=int(seed))

    # -- JSON form (the CLI's --spec file format) -----------------------

    def to_json_dict(self) -> dict:
        return {
            "schema": list(self.schema),
            "n_total": self.n_total,
            "fraud_prior": self.fraud_prior,
            "seed": self.seed,
            "credentials": {
                name: {
                    "p_pass_given_fraud": self.p_pass_given_fraud[name],
                    "p_pass_given_legit": self.p_pass_given_legit[name],
                    "p_missing": self.p_missing[name],
                }
                for name in self.schema
            },
            "latent_corr": np.asarray(self.latent_corr).tolist(),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "GeneratorSpec":
        try:
            schema = tuple(data["schema"])
            creds = data["credentials"]
            spec = cls(
                schema=schema,
                n_total=int(data["n_total"]),
                fraud_prior=float(data["fraud_prior"]),
                p_pass_given_fraud={n: float(creds[n]["p_pass_given_fraud"]) for n in schema},
                p_pass_given_legit={n: float(creds[n]["p_pass_given_legit"]) for n in schema},
                p_missing={n: float(creds[n]["p_missing"]) for n in schema},
                latent_corr=np.asarray(data["latent_corr"], dtype=np.float64),
                seed=int(data["seed"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecValidationError(f"malformed generator spec: {exc}") from exc
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str | Path) -> "GeneratorSpec":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SpecValidationError(f"generator spec is not valid JSON: {exc}") from exc
        return cls.from_json_dict(data)


def _check_prob(name: str, value: float) -> None:
    if not (0.0 <= value <= 1.0):
        raise SpecValidationError(f"{name} must be a probability in [0, 1], got {value!r}")


def _latent_factor(corr: np.ndarray) -> np.ndarray:
    # eigh-based factor works for singular PSD matrices and is deterministic
    vals, vecs = np.linalg.eigh(corr)
    vals = np.clip(vals, 0.0, None)
    return vecs * np.sqrt(vals)


def _thresholds(p_obs: np.ndarray, p_missing: np.ndarray) -> np.ndarray:
    """Latent quantile per credential: inflate the observed target by
    availability, then probit."""
    avail = 1.0 - p_missing
    latent = np.divide(p_obs, avail, out=np.zeros_like(p_obs), where=avail > 0)
    latent = np.clip(latent, 0.0, 1.0)
    # ndtri(0) = -inf and ndtri(1) = +inf are fine: the z <= t comparison
    # then yields never-pass / always-pass exactly.
    return ndtri(latent)


def generate(spec: GeneratorSpec) -> Dataset:
    """Draw a Dataset from the spec; fully deterministic given the seed."""
    spec.validate()
    schema = tuple(spec.schema)
    k = len(schema)
    n = spec.n_total
    rng = np.random.default_rng(spec.seed)

    fraud = rng.random(n) < spec.fraud_prior
    factor = _latent_factor(np.asarray(spec.latent_corr, dtype=np.float64))
    z = rng.standard_normal((n, k)) @ factor.T
    u_missing = rng.random((n, k))

    p_missing = np.asarray([spec.p_missing[c] for c in schema], dtype=np.float64)
    t_fraud = _thresholds(
        np.asarray([spec.p_pass_given_fraud[c] for c in schema], dtype=np.float64), p_missing
    )
    t_legit = _thresholds(
        np.asarray([spec.p_pass_given_legit[c] for c in schema], dtype=np.float64), p_missing
    )
    thresholds = np.where(fraud[:, None], t_fraud[None, :], t_legit[None, :])
    codes = (z <= thresholds).astype(np.int8)
    codes[u_missing < p_missing[None, :]] = 2
    return Dataset(schema, codes, fraud)


# ---------------------------------------------------------------------------
# built-in reference profile
# ---------------------------------------------------------------------------

# Ten credentials: overall pass rate, fraud share among passers, and missing
# cells per 5000 records. Weak credentials (A-D) are passable by most
# fraudsters; strong ones (G, I, J) are never passed by fraud in this profile
# and carry heavy missingness.
DEFAULT_PROFILE: dict[CredentialId, tuple[float, float, int]] = {
    "A": (0.8590, 0.04494, 218),
    "B": (0.8086, 0.04477, 337),
    "C": (0.7142, 0.03500, 457),
    "D": (0.7866, 0.02670, 576),
    "E": (0.6026, 0.00664, 695),
    "F": (0.5474, 0.00438, 815),
    "G": (0.4948, 0.00000, 934),
    "H": (0.2966, 0.00067, 2100),
    "I": (0.1944, 0.00000, 2750),
    "J": (0.1124, 0.00000, 3006),
}
DEFAULT_PRIOR = 0.0388
DEFAULT_N_TOTAL = 5000
# Observed (phi) correlation targets between pass indicators; all other
# pairs are uncorrelated beyond what the class mixture induces.
DEFAULT_CORR_TARGETS: dict[tuple[CredentialId, CredentialId], float] = {
    ("A", "B"): 0.87,
    ("H", "I"): 0.16,
    ("H", "J"): 0.07,
}
# Curated so the default 5000-row draw contains exactly 194 fraud records
# and lands every profile cell within +-0.015 of its target.
DEFAULT_SEED = 273


def _backsolve_class_marginals(
    pass_rate: float, fraud_rate_given_pass: float, prior: float, p_missing: float
) -> tuple[float, float]:
    """Per-class observed pass targets from the overall rate and the fraud
    share among passers.

    P(pass|fraud) = fraud_rate_given_pass * pass_rate / prior, clamped to the
    availability bound (it cannot exceed 1 - p_missing); P(pass|legit) is then
    re-solved from the total-probability identity so the overall pass rate
    stays exactly on target.
    """
    avail = 1.0 - p_missing
    pf = fraud_rate_given_pass * pass_rate / prior if prior > 0 else 0.0
    pf = min(max(pf, 0.0), 1.0, avail)
    pl = (pass_rate - prior * pf) / (1.0 - prior) if prior < 1.0 else 0.0
    pl = min(max(pl, 0.0), avail)
    return pf, pl


def _mixture_phi(
    r: float,
    weights: tuple[float, float],
    latent_a: tuple[float, float],
    latent_b: tuple[float, float],
) -> float:
    """Observed Pearson correlation of the two pass indicators among
    available cells, for latent correlation r, mixing the two classes."""
    from scipy.stats import multivariate_normal

    cov = np.array([[1.0, r], [r, 1.0]])
    p11 = 0.0
    pa = 0.0
    pb = 0.0
    for w, la, lb in zip(weights, latent_a, latent_b):
        ta = float(np.clip(ndtri(np.clip(la, 0.0, 1.0)), -_THRESH_CAP, _THRESH_CAP))
        tb = float(np.clip(ndtri(np.clip(lb, 0.0, 1.0)), -_THRESH_CAP, _THRESH_CAP))
        p11 += w * float(
            multivariate_normal(mean=[0.0, 0.0], cov=cov, allow_singular=True).cdf([ta, tb])
        )
        pa += w * float(ndtr(ta))
        pb += w * float(ndtr(tb))
    den = np.sqrt(pa * (1.0 - pa) * pb * (1.0 - pb))
    if den == 0.0:
        return 0.0
    return (p11 - pa * pb) / den


def latent_corr_for_target(
    target_phi: float,
    weights: tuple[float, float],
    latent_a: tuple[float, float],
    latent_b: tuple[float, float],
    tol: float = 1e-4,
) -> float:
    """Invert the copula forward model: latent correlation whose thresholded
    output has the requested observed correlation.

    Thresholding attenuates correlation, so the inversion can saturate at the
    cap when the target exceeds what the marginals allow; the saturated value
    is the closest achievable correlation.
    """
    lo, hi = -_CORR_CAP, _CORR_CAP
    if target_phi >= _mixture_phi(hi, weights, latent_a, latent_b):
        return hi
    if target_phi <= _mixture_phi(lo, weights, latent_a, latent_b):
        return lo
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if hi - lo < tol:
            break
        if _mixture_phi(mid, weights, latent_a, latent_b) < target_phi:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def default_spec() -> GeneratorSpec:
    """The built-in ten-credential generator configuration.

    Class marginals are back-solved from the profile's overall pass rates and
    fraud shares; latent correlations are inverted from the observed-
    correlation targets so regenerated data reproduces them (up to the
    saturation bound the marginals impose).
    """
    schema = tuple(DEFAULT_PROFILE.keys())
    prior = DEFAULT_PRIOR
    pf: dict[CredentialId, float] = {}
    pl: dict[CredentialId, float] = {}
    pm: dict[CredentialId, float] = {}
    for name, (pass_rate, frp, missing_count) in DEFAULT_PROFILE.items():
        pm[name] = missing_count / DEFAULT_N_TOTAL
        pf[name], pl[name] = _backsolve_class_marginals(pass_rate, frp, prior, pm[name])

    k = len(schema)
    corr = np.eye(k)
    weights = (prior, 1.0 - prior)
    for (a, b), target in DEFAULT_CORR_TARGETS.items():
        ia, ib = schema.index(a), schema.index(b)
        latent_a = (pf[a] / (1.0 - pm[a]), pl[a] / (1.0 - pm[a]))
        latent_b = (pf[b] / (1.0 - pm[b]), pl[b] / (1.0 - pm[b]))
        r = latent_corr_for_target(target, weights, latent_a, latent_b)
        corr[ia, ib] = corr[ib, ia] = r

    spec = GeneratorSpec(
        schema=schema,
        n_total=DEFAULT_N_TOTAL,
        fraud_prior=prior,
        p_pass_given_fraud=pf,
        p_pass_given_legit=pl,
        p_missing=pm,
        latent_corr=corr,
        seed=DEFAULT_SEED,
    )
    spec.validate()
    return spec
