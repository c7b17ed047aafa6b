"""Hot numeric kernels: octagon closure and box flowpipe/jump expansion.

Two interchangeable implementations live here: loop-style functions compiled
with numba (default when numba is importable) and vectorized numpy fallbacks.
Selection is controlled by the ``HYREACH_BACKEND`` environment variable:

    HYREACH_BACKEND=numpy   force the pure-numpy path
    HYREACH_BACKEND=numba   require numba (ImportError if missing)
    unset / auto            numba when available, numpy otherwise

Both paths execute the same arithmetic in the same order, so analysis results
are bit-identical between them (asserted in the test suite and exercised by
``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

import numpy as np

# Octagon template directions over (x, t), fixed order:
#   +x, -x, +t, -t, x+t, x-t, -x+t, -x-t
OCT_DIRS = np.array(
    [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0],
     [1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]]
)

# DBM node order: 0 = x+, 1 = x-, 2 = t+, 3 = t-.
_BAR = (1, 0, 3, 2)


# ---------------------------------------------------------------------------
# pure-numpy implementations

def _oct_to_dbm_np(off):
    """(K,8) offsets -> (K,4,4) difference-bound matrices."""
    k = off.shape[0]
    m = np.full((k, 4, 4), np.inf)
    m[:, 0, 0] = m[:, 1, 1] = m[:, 2, 2] = m[:, 3, 3] = 0.0
    m[:, 1, 0] = 2.0 * off[:, 0]
    m[:, 0, 1] = 2.0 * off[:, 1]
    m[:, 3, 2] = 2.0 * off[:, 2]
    m[:, 2, 3] = 2.0 * off[:, 3]
    m[:, 3, 0] = off[:, 4]
    m[:, 1, 2] = off[:, 4]
    m[:, 2, 0] = off[:, 5]
    m[:, 1, 3] = off[:, 5]
    m[:, 0, 2] = off[:, 6]
    m[:, 3, 1] = off[:, 6]
    m[:, 2, 1] = off[:, 7]
    m[:, 0, 3] = off[:, 7]
    return m


def _empty_tol_np(off):
    # scaled emptiness tolerance: min-plus path sums accumulate a few ulps,
    # which must not flag degenerate (point/segment) octagons as empty
    finite = np.where(np.isfinite(off), np.abs(off), 0.0)
    return 1e-12 * (1.0 + np.max(finite, axis=1))


def oct_close_many_np(off):
    """Tight closure of (K,8) octagon offsets.

    Returns (tight offsets (K,8), empty mask (K,)).  Offsets of empty rows are
    unspecified.
    """
    off = np.asarray(off, dtype=np.float64)
    tol = _empty_tol_np(off)
    m = _oct_to_dbm_np(off)
    for _ in range(2):
        for k in range(4):
            # Floyd-Warshall step, vectorized over rows
            m = np.minimum(m, m[:, :, k, None] + m[:, None, k, :])
        # octagonal strengthening: v_j - v_i <= (m[i,bar(i)] + m[bar(j),j]) / 2
        diag = np.empty((m.shape[0], 4))
        for i in range(4):
            diag[:, i] = m[:, i, _BAR[i]]
        half_i = diag * 0.5  # (K,4) indexed by i
        half_j = np.empty((m.shape[0], 4))
        for j in range(4):
            half_j[:, j] = m[:, _BAR[j], j] * 0.5
        m = np.minimum(m, half_i[:, :, None] + half_j[:, None, :])
    empty = np.zeros(m.shape[0], dtype=np.bool_)
    for i in range(4):
        empty |= m[:, i, i] < -tol
    out = np.empty_like(off)
    out[:, 0] = m[:, 1, 0] * 0.5
    out[:, 1] = m[:, 0, 1] * 0.5
    out[:, 2] = m[:, 3, 2] * 0.5
    out[:, 3] = m[:, 2, 3] * 0.5
    out[:, 4] = np.minimum(m[:, 3, 0], m[:, 1, 2])
    out[:, 5] = np.minimum(m[:, 2, 0], m[:, 1, 3])
    out[:, 6] = np.minimum(m[:, 0, 2], m[:, 3, 1])
    out[:, 7] = np.minimum(m[:, 2, 1], m[:, 0, 3])
    return out, empty


def expand_box_node_np(loc, lo, hi, rates, inv_lo, inv_hi, zero_dwell,
                       jstart, j_tgt, g_lo, g_hi, r_a, r_b,
                       delta, max_k,
                       out_j, out_lo, out_hi, out_k0, out_k1):
    """Flowpipe + jump successors for one node of the monolithic box engine.

    Computes the clipped flowpipe segments of ``loc`` from the entry box
    (lo, hi) on the fly, accumulates for every outgoing jump the hull of
    guard-enabled segments, applies the reset and the target invariant, and
    writes enabled children into the out_* arrays.

    Returns (child count, number of nonempty segments).
    """
    n = lo.shape[0]
    j0, j1 = int(jstart[loc]), int(jstart[loc + 1])
    nj = j1 - j0
    acc_on = np.zeros(nj, dtype=np.bool_)
    acc_lo = np.empty((nj, n))
    acc_hi = np.empty((nj, n))
    acc_k0 = np.zeros(nj, dtype=np.int64)
    acc_k1 = np.zeros(nj, dtype=np.int64)

    rate = rates[loc]
    ivlo = inv_lo[loc]
    ivhi = inv_hi[loc]
    if zero_dwell[loc]:
        seg_lo = np.maximum(lo, ivlo)[None, :]
        seg_hi = np.minimum(hi, ivhi)[None, :]
        if np.any(seg_lo[0] > seg_hi[0]):
            segs = 0
            seg_lo = seg_lo[:0]
            seg_hi = seg_hi[:0]
        else:
            segs = 1
    else:
        # chunked segment materialization until the invariant empties the pipe
        chunks_lo = []
        chunks_hi = []
        segs = 0
        k0 = 0
        done = False
        while not done and k0 < max_k:
            kc = min(4096, max_k - k0)
            ks = np.arange(k0, k0 + kc, dtype=np.float64)
            t0 = (ks * delta)[:, None]
            t1 = ((ks + 1.0) * delta)[:, None]
            s_lo = lo[None, :] + np.where(rate >= 0.0, rate * t0, rate * t1)
            s_hi = hi[None, :] + np.where(rate >= 0.0, rate * t1, rate * t0)
            s_lo = np.maximum(s_lo, ivlo[None, :])
            s_hi = np.minimum(s_hi, ivhi[None, :])
            alive = np.all(s_lo <= s_hi, axis=1)
            if np.all(alive):
                chunks_lo.append(s_lo)
                chunks_hi.append(s_hi)
                segs += kc
                k0 += kc
            else:
                last = int(np.argmin(alive))
                chunks_lo.append(s_lo[:last])
                chunks_hi.append(s_hi[:last])
                segs += last
                done = True
        if chunks_lo:
            seg_lo = np.concatenate(chunks_lo, axis=0)
            seg_hi = np.concatenate(chunks_hi, axis=0)
        else:
            seg_lo = np.empty((0, n))
            seg_hi = np.empty((0, n))

    for jj in range(nj):
        j = j0 + jj
        t_lo = np.maximum(seg_lo, g_lo[j][None, :])
        t_hi = np.minimum(seg_hi, g_hi[j][None, :])
        on = np.all(t_lo <= t_hi, axis=1)
        if not np.any(on):
            continue
        idx = np.nonzero(on)[0]
        acc_on[jj] = True
        acc_k0[jj] = idx[0]
        acc_k1[jj] = idx[-1]
        acc_lo[jj] = np.min(t_lo[idx], axis=0)
        acc_hi[jj] = np.max(t_hi[idx], axis=0)

    count = 0
    for jj in range(nj):
        if not acc_on[jj]:
            continue
        j = j0 + jj
        v1 = r_a[j] * acc_lo[jj] + r_b[j]
        v2 = r_a[j] * acc_hi[jj] + r_b[j]
        c_lo = np.minimum(v1, v2)
        c_hi = np.maximum(v1, v2)
        tgt = int(j_tgt[j])
        c_lo = np.maximum(c_lo, inv_lo[tgt])
        c_hi = np.minimum(c_hi, inv_hi[tgt])
        if np.any(c_lo > c_hi):
            continue
        out_j[count] = j
        out_lo[count] = c_lo
        out_hi[count] = c_hi
        out_k0[count] = acc_k0[jj]
        out_k1[count] = acc_k1[jj]
        count += 1
    return count, segs


# ---------------------------------------------------------------------------
# numba implementations (same arithmetic, loop style)

def _build_numba():
    from numba import njit  # noqa: deferred import

    @njit(cache=True)
    def oct_close_many_nb(off):
        rows = off.shape[0]
        out = np.empty_like(off)
        empty = np.zeros(rows, dtype=np.bool_)
        m = np.empty((4, 4))
        for r in range(rows):
            maxabs = 0.0
            for d in range(8):
                v = off[r, d]
                if np.isfinite(v):
                    av = abs(v)
                    if av > maxabs:
                        maxabs = av
            tol = 1e-12 * (1.0 + maxabs)
            for i in range(4):
                for j in range(4):
                    m[i, j] = np.inf
                m[i, i] = 0.0
            m[1, 0] = 2.0 * off[r, 0]
            m[0, 1] = 2.0 * off[r, 1]
            m[3, 2] = 2.0 * off[r, 2]
            m[2, 3] = 2.0 * off[r, 3]
            m[3, 0] = off[r, 4]
            m[1, 2] = off[r, 4]
            m[2, 0] = off[r, 5]
            m[1, 3] = off[r, 5]
            m[0, 2] = off[r, 6]
            m[3, 1] = off[r, 6]
            m[2, 1] = off[r, 7]
            m[0, 3] = off[r, 7]
            for _ in range(2):
                for k in range(4):
                    for i in range(4):
                        mik = m[i, k]
                        for j in range(4):
                            v = mik + m[k, j]
                            if v < m[i, j]:
                                m[i, j] = v
                for i in range(4):
                    bi = 1 if i == 0 else (0 if i == 1 else (3 if i == 2 else 2))
                    hi_ = m[i, bi] * 0.5
                    for j in range(4):
                        bj = 1 if j == 0 else (0 if j == 1 else (3 if j == 2 else 2))
                        v = hi_ + m[bj, j] * 0.5
                        if v < m[i, j]:
                            m[i, j] = v
            isempty = False
            for i in range(4):
                if m[i, i] < -tol:
                    isempty = True
            empty[r] = isempty
            out[r, 0] = m[1, 0] * 0.5
            out[r, 1] = m[0, 1] * 0.5
            out[r, 2] = m[3, 2] * 0.5
            out[r, 3] = m[2, 3] * 0.5
            out[r, 4] = min(m[3, 0], m[1, 2])
            out[r, 5] = min(m[2, 0], m[1, 3])
            out[r, 6] = min(m[0, 2], m[3, 1])
            out[r, 7] = min(m[2, 1], m[0, 3])
        return out, empty

    @njit(cache=True)
    def expand_box_node_nb(loc, lo, hi, rates, inv_lo, inv_hi, zero_dwell,
                           jstart, j_tgt, g_lo, g_hi, r_a, r_b,
                           delta, max_k,
                           out_j, out_lo, out_hi, out_k0, out_k1):
        n = lo.shape[0]
        j0 = jstart[loc]
        j1 = jstart[loc + 1]
        nj = j1 - j0
        acc_on = np.zeros(nj, dtype=np.bool_)
        acc_lo = np.empty((nj, n))
        acc_hi = np.empty((nj, n))
        acc_k0 = np.zeros(nj, dtype=np.int64)
        acc_k1 = np.zeros(nj, dtype=np.int64)
        seg_lo = np.empty(n)
        seg_hi = np.empty(n)
        t_lo = np.empty(n)
        t_hi = np.empty(n)

        if zero_dwell[loc]:
            kmax = 1
        else:
            kmax = max_k
        segs = 0
        for k in range(kmax):
            ok = True
            for d in range(n):
                r = rates[loc, d]
                if zero_dwell[loc]:
                    slo = lo[d]
                    shi = hi[d]
                elif r >= 0.0:
                    slo = lo[d] + r * (k * delta)
                    shi = hi[d] + r * ((k + 1) * delta)
                else:
                    slo = lo[d] + r * ((k + 1) * delta)
                    shi = hi[d] + r * (k * delta)
                if slo < inv_lo[loc, d]:
                    slo = inv_lo[loc, d]
                if shi > inv_hi[loc, d]:
                    shi = inv_hi[loc, d]
                if slo > shi:
                    ok = False
                    break
                seg_lo[d] = slo
                seg_hi[d] = shi
            if not ok:
                break
            segs += 1
            for jj in range(nj):
                j = j0 + jj
                on = True
                for d in range(n):
                    tl = seg_lo[d]
                    th = seg_hi[d]
                    if g_lo[j, d] > tl:
                        tl = g_lo[j, d]
                    if g_hi[j, d] < th:
                        th = g_hi[j, d]
                    if tl > th:
                        on = False
                        break
                    t_lo[d] = tl
                    t_hi[d] = th
                if not on:
                    continue
                if acc_on[jj]:
                    for d in range(n):
                        if t_lo[d] < acc_lo[jj, d]:
                            acc_lo[jj, d] = t_lo[d]
                        if t_hi[d] > acc_hi[jj, d]:
                            acc_hi[jj, d] = t_hi[d]
                    acc_k1[jj] = k
                else:
                    acc_on[jj] = True
                    acc_k0[jj] = k
                    acc_k1[jj] = k
                    for d in range(n):
                        acc_lo[jj, d] = t_lo[d]
                        acc_hi[jj, d] = t_hi[d]

        count = 0
        for jj in range(nj):
            if not acc_on[jj]:
                continue
            j = j0 + jj
            tgt = j_tgt[j]
            ok = True
            for d in range(n):
                a = r_a[j, d]
                b = r_b[j, d]
                v1 = a * acc_lo[jj, d] + b
                v2 = a * acc_hi[jj, d] + b
                cl = v1 if v1 < v2 else v2
                ch = v2 if v2 > v1 else v1
                if cl < inv_lo[tgt, d]:
                    cl = inv_lo[tgt, d]
                if ch > inv_hi[tgt, d]:
                    ch = inv_hi[tgt, d]
                if cl > ch:
                    ok = False
                    break
                out_lo[count, d] = cl
                out_hi[count, d] = ch
            if not ok:
                continue
            out_j[count] = j
            out_k0[count] = acc_k0[jj]
            out_k1[count] = acc_k1[jj]
            count += 1
        return count, segs

    return oct_close_many_nb, expand_box_node_nb


def _select_backend():
    want = os.environ.get("HYREACH_BACKEND", "auto").strip().lower()
    if want in ("", "auto"):
        try:
            return "numba", _build_numba()
        except ImportError:
            return "numpy", None
    if want == "numpy":
        return "numpy", None
    if want == "numba":
        return "numba", _build_numba()
    raise ValueError(f"HYREACH_BACKEND must be auto, numba or numpy, got {want!r}")


BACKEND, _nb_funcs = _select_backend()

if BACKEND == "numba":
    oct_close_many, expand_box_node = _nb_funcs
else:
    oct_close_many, expand_box_node = oct_close_many_np, expand_box_node_np


def numba_available() -> bool:
    try:
        import numba  # noqa
        return True
    except ImportError:
        return False


def get_impls():
    """Both implementations, for cross-checking and benchmarks.

    Returns a dict backend-name -> (oct_close_many, expand_box_node); the
    numba pair is present only when numba imports.
    """
    impls = {"numpy": (oct_close_many_np, expand_box_node_np)}
    if numba_available():
        impls["numba"] = _build_numba() if BACKEND != "numba" else _nb_funcs
    return impls
