"""Counting kernels over the outcome matrix, with two interchangeable backends.

Every estimator, posterior and policy operation reduces to exact integer
counting over the (records x credentials) int8 code matrix. The kernels here
are the only hot loops in the package. Two implementations are provided:

* ``numpy`` (default): vectorized boolean masks. No compilation latency.
* ``numba``: fused single-pass @njit loops. Pays a one-off JIT compile
  (cached on disk afterwards) and wins on large datasets; see
  ``benchmarks/bench_kernels.py``.

Select via the ``IVRAUTH_BACKEND`` environment variable ("numpy" or "numba"),
read once at import, or programmatically with :func:`set_backend`. Both
backends compute identical integers, so results are bit-identical.

Code values match :class:`ivrauth.model.Outcome`: 0 fail, 1 pass, 2 missing.
"""

from __future__ import annotations

import os

import numpy as np

PASS_CODE = 1

_BACKENDS = ("numpy", "numba")


# ---------------------------------------------------------------------------
# numpy backend
# ---------------------------------------------------------------------------

def _match_mask_numpy(codes, cred_idx, want_pass):
    mask = np.ones(codes.shape[0], dtype=bool)
    for j, idx in enumerate(cred_idx):
        col_is_pass = codes[:, idx] == PASS_CODE
        mask &= col_is_pass if want_pass[j] else ~col_is_pass
    return mask


def _refine_mask_numpy(codes, mask, idx, want_pass):
    col_is_pass = codes[:, idx] == PASS_CODE
    return mask & (col_is_pass if want_pass else ~col_is_pass)


def _count_mask_numpy(mask, fraud):
    return int(np.count_nonzero(mask)), int(np.count_nonzero(mask & fraud))


def _per_credential_counts_numpy(codes, fraud):
    is_pass = codes == PASS_CODE
    pass_count = is_pass.sum(axis=0, dtype=np.int64)
    fraud_pass = is_pass[fraud].sum(axis=0, dtype=np.int64)
    missing_count = (codes == 2).sum(axis=0, dtype=np.int64)
    return pass_count, fraud_pass, missing_count


def _corr_counts_numpy(codes, i, j, pairwise_delete):
    ci = codes[:, i]
    cj = codes[:, j]
    if pairwise_delete:
        keep = (ci != 2) & (cj != 2)
        ci = ci[keep]
        cj = cj[keep]
    x = ci == PASS_CODE
    y = cj == PASS_CODE
    n = int(x.shape[0])
    sx = int(np.count_nonzero(x))
    sy = int(np.count_nonzero(y))
    sxy = int(np.count_nonzero(x & y))
    return n, sx, sy, sxy


_NUMPY_IMPL = {
    "match_mask": _match_mask_numpy,
    "refine_mask": _refine_mask_numpy,
    "count_mask": _count_mask_numpy,
    "per_credential_counts": _per_credential_counts_numpy,
    "corr_counts": _corr_counts_numpy,
}


# ---------------------------------------------------------------------------
# numba backend (lazy: import/compile only when requested)
# ---------------------------------------------------------------------------

_numba_impl: dict | None = None


def _build_numba_impl() -> dict:
    from numba import njit

    @njit(cache=True)
    def match_mask(codes, cred_idx, want_pass):  # pragma: no cover - jitted
        n = codes.shape[0]
        out = np.empty(n, dtype=np.bool_)
        m = cred_idx.shape[0]
        for r in range(n):
            ok = True
            for j in range(m):
                is_pass = codes[r, cred_idx[j]] == PASS_CODE
                if is_pass != want_pass[j]:
                    ok = False
                    break
            out[r] = ok
        return out

    @njit(cache=True)
    def refine_mask(codes, mask, idx, want_pass):  # pragma: no cover - jitted
        n = codes.shape[0]
        out = np.empty(n, dtype=np.bool_)
        for r in range(n):
            if mask[r]:
                is_pass = codes[r, idx] == PASS_CODE
                out[r] = is_pass == want_pass
            else:
                out[r] = False
        return out

    @njit(cache=True)
    def count_mask(mask, fraud):  # pragma: no cover - jitted
        total = 0
        bad = 0
        for r in range(mask.shape[0]):
            if mask[r]:
                total += 1
                if fraud[r]:
                    bad += 1
        return total, bad

    @njit(cache=True)
    def per_credential_counts(codes, fraud):  # pragma: no cover - jitted
        n, k = codes.shape
        pass_count = np.zeros(k, dtype=np.int64)
        fraud_pass = np.zeros(k, dtype=np.int64)
        missing_count = np.zeros(k, dtype=np.int64)
        for r in range(n):
            for c in range(k):
                v = codes[r, c]
                if v == PASS_CODE:
                    pass_count[c] += 1
                    if fraud[r]:
                        fraud_pass[c] += 1
                elif v == 2:
                    missing_count[c] += 1
        return pass_count, fraud_pass, missing_count

    @njit(cache=True)
    def corr_counts(codes, i, j, pairwise_delete):  # pragma: no cover - jitted
        n_rows = codes.shape[0]
        n = 0
        sx = 0
        sy = 0
        sxy = 0
        for r in range(n_rows):
            vi = codes[r, i]
            vj = codes[r, j]
            if pairwise_delete and (vi == 2 or vj == 2):
                continue
            n += 1
            x = vi == PASS_CODE
            y = vj == PASS_CODE
            if x:
                sx += 1
            if y:
                sy += 1
            if x and y:
                sxy += 1
        return n, sx, sy, sxy

    def count_mask_py(mask, fraud):
        total, bad = count_mask(mask, fraud)
        return int(total), int(bad)

    def corr_counts_py(codes, i, j, pairwise_delete):
        n, sx, sy, sxy = corr_counts(codes, i, j, pairwise_delete)
        return int(n), int(sx), int(sy), int(sxy)

    return {
        "match_mask": match_mask,
        "refine_mask": refine_mask,
        "count_mask": count_mask_py,
        "per_credential_counts": per_credential_counts,
        "corr_counts": corr_counts_py,
    }


# ---------------------------------------------------------------------------
# backend selection
# ---------------------------------------------------------------------------

_active_name = "numpy"
_active = _NUMPY_IMPL


def set_backend(name: str) -> None:
    """Switch the kernel backend ("numpy" or "numba") for this process."""
    global _active, _active_name, _numba_impl
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choose from {_BACKENDS}")
    if name == "numba":
        if _numba_impl is None:
            _numba_impl = _build_numba_impl()
        _active = _numba_impl
    else:
        _active = _NUMPY_IMPL
    _active_name = name


def active_backend() -> str:
    return _active_name


def numba_available() -> bool:
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


# ---------------------------------------------------------------------------
# public kernel API (dispatches to the active backend)
# ---------------------------------------------------------------------------

def match_mask(codes: np.ndarray, cred_idx: np.ndarray, want_pass: np.ndarray) -> np.ndarray:
    """Boolean row mask: records matching every (credential, wanted) item.

    want_pass True matches an explicit Pass; False matches Fail-or-Missing.
    """
    if cred_idx.shape[0] == 0:
        return np.ones(codes.shape[0], dtype=bool)
    return np.asarray(
        _active["match_mask"](
            codes, np.asarray(cred_idx, dtype=np.int64), np.asarray(want_pass, dtype=bool)
        ),
        dtype=bool,
    )


def refine_mask(codes: np.ndarray, mask: np.ndarray, idx: int, want_pass: bool) -> np.ndarray:
    """Narrow an existing row mask by one more (credential, wanted) condition."""
    return np.asarray(_active["refine_mask"](codes, mask, idx, bool(want_pass)), dtype=bool)


def count_mask(mask: np.ndarray, fraud: np.ndarray) -> tuple[int, int]:
    """(matching records, fraud records among them)."""
    return _active["count_mask"](mask, fraud)


def per_credential_counts(
    codes: np.ndarray, fraud: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-column (pass count, fraud-and-pass count, missing count)."""
    pass_count, fraud_pass, missing_count = _active["per_credential_counts"](codes, fraud)
    return (
        np.asarray(pass_count, dtype=np.int64),
        np.asarray(fraud_pass, dtype=np.int64),
        np.asarray(missing_count, dtype=np.int64),
    )


def corr_counts(
    codes: np.ndarray, i: int, j: int, pairwise_delete: bool
) -> tuple[int, int, int, int]:
    """Exact joint counts (n, sum x, sum y, sum xy) of two pass indicators."""
    return _active["corr_counts"](codes, int(i), int(j), bool(pairwise_delete))


_env_choice = os.environ.get("IVRAUTH_BACKEND", "").strip().lower()
if _env_choice:
    try:
        set_backend(_env_choice)
    except ValueError as exc:
        raise RuntimeError(f"IVRAUTH_BACKEND: {exc}") from None
