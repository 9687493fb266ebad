"""Degree sequences, top adjacency eigenvalues and clustering coefficients."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as sla
from numba import njit

from .graph import MultiGraph, SimpleGraph, simplify

DENSE_LIMIT = 2000
DENSE_FALLBACK_LIMIT = 12000
DEFAULT_K = 100


def degree_sequence(g: SimpleGraph | MultiGraph) -> np.ndarray:
    """Degrees of the simplified graph, indexed by node."""
    return simplify(g).degrees().astype(np.int64)


def top_degrees(g: SimpleGraph, k: int) -> np.ndarray:
    """The ``k`` largest degrees, descending."""
    d = np.sort(degree_sequence(g))[::-1]
    return d[:k]


# ---------------------------------------------------------------------------
# spectrum


@dataclass(frozen=True)
class SpectrumResult:
    """Largest algebraic eigenvalues (descending) with per-pair residual norms.

    Only pairs whose residual ``||Ax - lambda x|| / ||x||`` is within
    ``tolerance`` are reported, so ``k_converged`` may be below ``k_requested``.
    """

    eigenvalues: np.ndarray
    residuals: np.ndarray
    k_requested: int
    k_converged: int
    tolerance: float
    method: str

    def positive(self) -> np.ndarray:
        return self.eigenvalues[self.eigenvalues > 0]


def _dense_top(A, k):
    n = A.shape[0]
    return scipy.linalg.eigh(A.toarray(), subset_by_index=[n - k, n - 1])


def _lanczos_top(A, k):
    n = A.shape[0]
    v0 = np.ones(n) / np.sqrt(n)
    ncv = min(n, max(2 * k + 1, 20))
    try:
        return sla.eigsh(A, k=k, which="LA", tol=1e-12, ncv=ncv, maxiter=max(1000, 20 * n), v0=v0)
    except sla.ArpackError as exc:
        if isinstance(exc, sla.ArpackNoConvergence):
            raise
        # retry once with a larger Krylov space
        ncv = min(n, max(4 * k, 40))
        return sla.eigsh(A, k=k, which="LA", tol=1e-12, ncv=ncv, maxiter=max(1000, 20 * n), v0=v0)


def top_eigenvalues(g: SimpleGraph | MultiGraph, k: int | None = None,
                    tolerance: float | None = None) -> SpectrumResult:
    """The ``k`` largest eigenvalues of the 0/1 adjacency matrix.

    Dense symmetric solve for ``n <= 2000``, otherwise implicitly restarted
    Lanczos (ARPACK).  ``tolerance`` defaults to ``1e-8 * max_degree``.
    """
    s = simplify(g)
    n = s.node_count
    if k is None:
        k = min(n, DEFAULT_K)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    dmax = int(s.degrees().max()) if n else 0
    if tolerance is None:
        tolerance = 1e-8 * max(dmax, 1)
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    A = s.adjacency()
    if n <= DENSE_LIMIT or k >= n - 1:
        vals, vecs = _dense_top(A, k)
        method = "dense"
    else:
        method = "lanczos"
        try:
            vals, vecs = _lanczos_top(A, k)
        except sla.ArpackNoConvergence as exc:
            vals, vecs = exc.eigenvalues, exc.eigenvectors
        except sla.ArpackError:
            if n > DENSE_FALLBACK_LIMIT:
                raise
            vals, vecs = _dense_top(A, k)
            method = "dense"
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    res = np.linalg.norm(A @ vecs - vecs * vals, axis=0) / np.linalg.norm(vecs, axis=0)
    ok = res <= tolerance
    # keep the leading run of converged pairs so the reported list is a true top-j
    j = int(np.argmin(ok)) if not ok.all() else len(ok)
    return SpectrumResult(vals[:j].copy(), res[:j].copy(), k, j, tolerance, method)


# ---------------------------------------------------------------------------
# clustering


@njit(cache=True)
def _oriented(indptr, indices, deg):
    """Out-neighbour lists towards higher (degree, id) rank."""
    n = indptr.shape[0] - 1
    out_ptr = np.zeros(n + 1, dtype=np.int64)
    for u in range(n):
        c = 0
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if deg[v] > deg[u] or (deg[v] == deg[u] and v > u):
                c += 1
        out_ptr[u + 1] = out_ptr[u] + c
    out = np.empty(out_ptr[n], dtype=np.int32)
    for u in range(n):
        pos = out_ptr[u]
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            if deg[v] > deg[u] or (deg[v] == deg[u] and v > u):
                out[pos] = v
                pos += 1
    return out_ptr, out


@njit(cache=True)
def _clique_counts(indptr, indices, deg):
    n = indptr.shape[0] - 1
    optr, onb = _oriented(indptr, indices, deg)
    k3 = np.zeros(n, dtype=np.int64)
    k4 = np.zeros(n, dtype=np.int64)
    mark_u = np.zeros(n, dtype=np.bool_)
    mark_c = np.zeros(n, dtype=np.bool_)
    common = np.empty(n, dtype=np.int32)
    for u in range(n):
        for e in range(optr[u], optr[u + 1]):
            mark_u[onb[e]] = True
        for e in range(optr[u], optr[u + 1]):
            v = onb[e]
            nc = 0
            for f in range(optr[v], optr[v + 1]):
                w = onb[f]
                if mark_u[w]:
                    common[nc] = w
                    nc += 1
                    k3[u] += 1
                    k3[v] += 1
                    k3[w] += 1
            for i in range(nc):
                mark_c[common[i]] = True
            for i in range(nc):
                w = common[i]
                for f in range(optr[w], optr[w + 1]):
                    x = onb[f]
                    if mark_c[x]:
                        k4[u] += 1
                        k4[v] += 1
                        k4[w] += 1
                        k4[x] += 1
            for i in range(nc):
                mark_c[common[i]] = False
        for e in range(optr[u], optr[u + 1]):
            mark_u[onb[e]] = False
    return k3, k4


def clique_counts(g: SimpleGraph) -> tuple[np.ndarray, np.ndarray]:
    """Per-node triangle and 4-clique membership counts."""
    s = simplify(g)
    deg = s.degrees().astype(np.int64)
    return _clique_counts(s.indptr, s.indices, deg)


@dataclass(frozen=True)
class ClusteringReport:
    """Clique/wedge counts and the four clustering coefficients.

    ``wedges = 2 sum_u C(d_u, 2)`` so that ``global = 6 triangles / wedges`` is 1
    on a clique; ``three_wedges = sum_u K3(u) (d_u - 2)`` and
    ``ho_global = 12 four_cliques / three_wedges``.  Local averages are taken
    over all nodes, with 0 for nodes of degree < 2 (``local``) or with no
    triangle or degree <= 2 (``ho_local``).
    """

    triangles: int
    wedges: int
    four_cliques: int
    three_wedges: int
    global_: float
    local_avg: float
    ho_global: float
    ho_local_avg: float

    def to_dict(self) -> dict:
        return {"triangles": self.triangles, "wedges": self.wedges,
                "four_cliques": self.four_cliques, "three_wedges": self.three_wedges,
                "global": self.global_, "local_avg": self.local_avg,
                "ho_global": self.ho_global, "ho_local_avg": self.ho_local_avg}


def clustering(g: SimpleGraph | MultiGraph) -> ClusteringReport:
    s = simplify(g)
    d = s.degrees().astype(np.int64)
    k3, k4 = clique_counts(s)
    n = s.node_count
    triangles = int(k3.sum()) // 3
    four = int(k4.sum()) // 4
    wedges = int((d * (d - 1)).sum())
    three = int((k3 * np.maximum(d - 2, 0)).sum())
    local = np.zeros(n)
    ok = d >= 2
    local[ok] = 2.0 * k3[ok] / (d[ok] * (d[ok] - 1))
    ho = np.zeros(n)
    ok = (k3 > 0) & (d > 2)
    ho[ok] = 3.0 * k4[ok] / (k3[ok] * (d[ok] - 2))
    return ClusteringReport(
        triangles=triangles, wedges=wedges, four_cliques=four, three_wedges=three,
        global_=6.0 * triangles / wedges if wedges else 0.0,
        local_avg=float(local.mean()) if n else 0.0,
        ho_global=12.0 * four / three if three else 0.0,
        ho_local_avg=float(ho.mean()) if n else 0.0,
    )
