"""Power-law fitting and goodness-of-fit testing (Clauset, Shalizi and Newman).

For each candidate ``xmin`` the exponent is the maximum-likelihood estimate on
the tail ``x >= xmin``; the chosen ``xmin`` minimises the Kolmogorov-Smirnov
distance between the empirical tail and the fitted model.  The p-value comes
from a semi-parametric bootstrap in which every synthetic data set is refit
from scratch.

Continuous model: ``p(x) = (alpha - 1) / xmin * (x / xmin) ** -alpha``.
Discrete model: ``P(X = k) = k ** -alpha / zeta(alpha, xmin)`` for integers
``k >= xmin``; its exponent uses the ``xmin - 1/2`` approximation
``alpha = 1 + n / sum(log(x / (xmin - 1/2)))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numba import njit
from scipy.special import zeta

MIN_TAIL = 10
SIGNIFICANCE = 0.1
N_BOOT = 250


class PowerLawError(ValueError):
    """Data that cannot be fit (too few distinct values, nonpositive entries)."""


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    xmin: float
    ks: float
    n_tail: int
    discrete: bool
    n: int = 0
    p_value: float | None = None
    n_boot: int = 0
    threshold: float = SIGNIFICANCE

    @property
    def significant(self) -> bool:
        """``p_value >= threshold``; False until a p-value has been computed."""
        return self.p_value is not None and self.p_value >= self.threshold

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "xmin": self.xmin, "ks": self.ks,
                "n_tail": self.n_tail, "p_value": self.p_value,
                "discrete": self.discrete, "significant": self.significant}


def _prepare(xs, discrete, min_distinct=2):
    x = np.asarray(xs, dtype=np.float64).ravel()
    if x.size == 0:
        raise PowerLawError("no data")
    if not np.all(np.isfinite(x)) or x.min() <= 0:
        raise PowerLawError("data must be finite and positive")
    if discrete:
        if np.any(x != np.floor(x)):
            raise PowerLawError("discrete data must be integers")
    values, counts = np.unique(x, return_counts=True)
    if values.size < min_distinct:
        raise PowerLawError("need at least two distinct values")
    return values, counts


def _min_tail(n_total, min_tail):
    return max(2, min(min_tail, n_total))


# ---------------------------------------------------------------------------
# continuous


@njit(cache=True)
def _deviation(cum, log_values, i, j, n, alpha):
    base = cum[i - 1] if i > 0 else 0.0
    below = (cum[j - 1] - base) if j > 0 else 0.0
    model = 1.0 - math.exp((1.0 - alpha) * (log_values[j] - log_values[i]))
    return max(abs(below / n - model), abs((cum[j] - base) / n - model))


@njit(cache=True)
def _continuous_scan(counts, log_values, last):
    """Exact KS-minimising candidate among indices [0, last).

    A strided pass gives a lower bound on every candidate's KS distance; exact
    distances are then computed in order of that bound until the bound alone
    exceeds the best distance found.  Ties go to the smaller index.
    """
    d = log_values.shape[0]
    cum = np.cumsum(counts)
    total = cum[d - 1]
    tail_log = np.zeros(d + 1)
    for j in range(d - 1, -1, -1):
        tail_log[j] = tail_log[j + 1] + counts[j] * log_values[j]
    alphas = np.full(last, np.nan)
    bound = np.full(last, np.inf)
    stride = max(1, d // 256)
    for i in range(last):
        n = total - (cum[i - 1] if i > 0 else 0.0)
        s = tail_log[i] - n * log_values[i]
        if s <= 0:
            continue
        alpha = 1.0 + n / s
        alphas[i] = alpha
        lb = 0.0
        for j in range(i, d, stride):
            lb = max(lb, _deviation(cum, log_values, i, j, n, alpha))
        bound[i] = lb
    order = np.argsort(bound, kind="mergesort")
    best = np.inf
    best_i = -1
    for i in order:
        if bound[i] > best or not np.isfinite(bound[i]):
            break
        n = total - (cum[i - 1] if i > 0 else 0.0)
        ks = 0.0
        for j in range(i, d):
            ks = max(ks, _deviation(cum, log_values, i, j, n, alphas[i]))
            if ks > best:
                break
        if ks < best or (ks == best and i < best_i):
            best = ks
            best_i = i
    return best_i, (alphas[best_i] if best_i >= 0 else np.nan), best


def fit_continuous(xs, xmin: float | None = None, min_tail: int = MIN_TAIL) -> PowerLawFit:
    """Continuous power-law fit; scans ``xmin`` over distinct data values unless given.

    Candidates leave at least ``min_tail`` points in the tail (fewer only when
    the whole sample is smaller) and are not the maximum value.
    """
    values, counts = _prepare(xs, discrete=False, min_distinct=1 if xmin else 2)
    n_total = int(counts.sum())
    logs = np.log(values)
    if xmin is not None:
        if xmin <= 0:
            raise PowerLawError("xmin must be positive")
        tail = values >= xmin
        n = int(counts[tail].sum())
        if n == 0:
            raise PowerLawError("no data at or above xmin")
        s = float(counts[tail] @ (logs[tail] - math.log(xmin)))
        if s <= 0:
            raise PowerLawError("tail has no spread above xmin")
        alpha = 1.0 + n / s
        ks = _ks_continuous(values[tail], counts[tail], alpha, xmin)
        return PowerLawFit(alpha, float(xmin), ks, n, False, n_total)
    need = _min_tail(n_total, min_tail)
    tail_counts = np.cumsum(counts[::-1])[::-1]
    last = int(np.searchsorted(-tail_counts, -need, side="right"))
    last = min(last, len(values) - 1)
    if last <= 0:
        raise PowerLawError("no admissible xmin candidate")
    best, alpha, ks = _continuous_scan(counts.astype(np.float64), logs, last)
    if best < 0:
        raise PowerLawError("no admissible xmin candidate")
    return PowerLawFit(float(alpha), float(values[best]), float(ks),
                       int(tail_counts[best]), False, n_total)


def _ks_continuous(values, counts, alpha, xmin):
    n = counts.sum()
    above = np.cumsum(counts) / n
    below = above - counts / n
    model = 1.0 - (values / xmin) ** (1.0 - alpha)
    return float(max(np.abs(above - model).max(), np.abs(below - model).max()))


# ---------------------------------------------------------------------------
# discrete


_EM_TERMS = 32


def log_hurwitz_zeta(a, q):
    """``log zeta(a, q)``, finite where ``zeta`` itself underflows.

    Underflowing entries use ``zeta = q^-a h`` with ``h = sum_n (1 + n/q)^-a``
    summed over 32 explicit terms plus an Euler-Maclaurin tail.
    """
    a, q = np.broadcast_arrays(np.asarray(a, dtype=np.float64), np.asarray(q, dtype=np.float64))
    z = zeta(a, q)
    out = np.empty(a.shape)
    ok = z > 1e-290
    with np.errstate(divide="ignore"):
        out[ok] = np.log(z[ok])
    if not ok.all():
        aa, qq = a[~ok], q[~ok]
        h = np.zeros(aa.shape)
        for n in range(_EM_TERMS):
            h += np.exp(-aa * np.log1p(n / qq))
        r = np.exp(-aa * np.log1p(_EM_TERMS / qq))
        qn = qq + _EM_TERMS
        h += r * (qn / (aa - 1.0) + 0.5 + aa / (12.0 * qn)) * np.where(np.isinf(qn), 0.0, 1.0)
        out[~ok] = -aa * np.log(qq) + np.log(h)
    return out


def _upper_tail(a, x, xmin_log_zeta):
    """``P(X > x) = zeta(a, x + 1) / zeta(a, xmin)`` for finite ``x``."""
    # cells with x < xmin overflow harmlessly; callers mask them out
    with np.errstate(over="ignore"):
        return np.exp(log_hurwitz_zeta(a, x + 1.0) - xmin_log_zeta)


def discrete_cdf(x, alpha, xmin):
    """``P(X <= x)`` for the discrete model; broadcasts over all arguments."""
    x = np.asarray(x, dtype=np.float64)
    return 1.0 - _upper_tail(alpha, x, log_hurwitz_zeta(alpha, xmin))


def _ks_discrete_rows(values, counts, alphas, starts, chunk_cells=1 << 21):
    """KS distance for candidate ``xmin = values[starts[c]]`` with exponent ``alphas[c]``.

    Between consecutive data values the empirical CDF is flat while the model
    CDF rises, so the supremum over integers is attained at a data value or
    just before the next one; both are evaluated.
    """
    d = len(values)
    out = np.empty(len(starts))
    at = values
    before_next = np.append(values[1:] - 1.0, np.inf)
    cum = np.cumsum(counts).astype(np.float64)
    rows = max(1, chunk_cells // (2 * d))
    for lo in range(0, len(starts), rows):
        idx = np.arange(lo, min(lo + rows, len(starts)))
        st = starts[idx]
        a = alphas[idx][:, None]
        xmin = values[st][:, None]
        lz0 = log_hurwitz_zeta(a, xmin)
        base = np.where(st > 0, cum[np.maximum(st - 1, 0)], 0.0)[:, None]
        n = cum[-1] - base
        emp = (cum[None, :] - base) / n
        f_at = 1.0 - _upper_tail(a, at[None, :], lz0)
        finite = np.isfinite(before_next)
        f_next = np.ones_like(f_at)
        f_next[:, finite] = 1.0 - _upper_tail(a, before_next[None, finite], lz0)
        diff = np.maximum(np.abs(emp - f_at), np.abs(emp - f_next))
        mask = np.arange(d)[None, :] >= st[:, None]
        out[idx] = np.where(mask, diff, 0.0).max(axis=1)
    return out


def _discrete_alphas(values, counts, starts):
    logs = np.log(values)
    tail_n = np.cumsum(counts[::-1])[::-1].astype(np.float64)
    tail_log = np.cumsum((counts * logs)[::-1])[::-1]
    n = tail_n[starts]
    s = tail_log[starts] - n * np.log(values[starts] - 0.5)
    return 1.0 + n / s, n


def fit_discrete(xs, xmin: int | None = None, min_tail: int = MIN_TAIL) -> PowerLawFit:
    """Discrete power-law fit for positive integer data.

    ``xmin`` is scanned over distinct values leaving at least ``min_tail``
    points in the tail; ties in KS go to the smaller ``xmin``.
    """
    values, counts = _prepare(xs, discrete=True, min_distinct=1 if xmin else 2)
    n_total = int(counts.sum())
    if xmin is not None:
        if xmin < 1:
            raise PowerLawError("xmin must be a positive integer")
        sel = values >= xmin
        if not sel.any():
            raise PowerLawError("no data at or above xmin")
        values, counts = values[sel], counts[sel]
        if values[0] != xmin:
            values = np.concatenate([[float(xmin)], values])
            counts = np.concatenate([[0], counts])
        starts = np.array([0])
    else:
        need = _min_tail(n_total, min_tail)
        tail_counts = np.cumsum(counts[::-1])[::-1]
        starts = np.nonzero(tail_counts >= need)[0]
        if starts.size == 0:
            raise PowerLawError("no admissible xmin candidate")
    alphas, tails = _discrete_alphas(values, counts, starts)
    kss = _ks_discrete_rows(values, counts, alphas, starts)
    best = int(np.argmin(kss))
    return PowerLawFit(float(alphas[best]), float(values[starts[best]]), float(kss[best]),
                       int(tails[best]), True, n_total)


def fit(xs, discrete: bool, min_tail: int = MIN_TAIL) -> PowerLawFit:
    return fit_discrete(xs, min_tail=min_tail) if discrete else fit_continuous(xs, min_tail=min_tail)


# ---------------------------------------------------------------------------
# sampling and bootstrap


def sample_continuous(alpha: float, xmin: float, size: int, rng) -> np.ndarray:
    """Inverse-CDF draws from the continuous power law."""
    u = rng.random(size)
    return xmin * (1.0 - u) ** (-1.0 / (alpha - 1.0))


def _reject_discrete(alpha, xmin, size, rng):
    # proposal floor(xmin U^(-1/(alpha-1))) has mass (k/xmin)^(1-alpha) - ((k+1)/xmin)^(1-alpha);
    # the target/proposal ratio is (alpha-1) / (k (1 - (1+1/k)^(1-alpha))) <= (1+1/xmin)^alpha
    out = np.empty(size, dtype=np.int64)
    filled = 0
    bound = math.exp(alpha * math.log1p(1.0 / xmin))
    while filled < size:
        want = size - filled
        batch = int(want * bound * 1.1) + 16
        u = 1.0 - rng.random(batch)
        k = np.floor(xmin * u ** (-1.0 / (alpha - 1.0)))
        k = k[np.isfinite(k) & (k < 2 ** 62)]
        accept = (alpha - 1.0) / (k * -np.expm1((1.0 - alpha) * np.log1p(1.0 / k)) * bound)
        keep = k[rng.random(k.size) < accept][:want]
        out[filled:filled + keep.size] = keep.astype(np.int64)
        filled += keep.size
    return out


def sample_discrete(alpha: float, xmin: int, size: int, rng) -> np.ndarray:
    """Exact draws from the discrete power law.

    Values below ``K = max(xmin, ceil(alpha))`` come from the explicit pmf;
    values from ``K`` on come from rejection against a floored Pareto, whose
    acceptance rate is at least ``(1 + 1/K)^-alpha >= 1/e`` there.
    """
    if not alpha > 1:
        raise PowerLawError("alpha must exceed 1")
    xmin = int(xmin)
    cut = max(xmin, math.ceil(alpha))
    if cut == xmin:
        return _reject_discrete(alpha, xmin, size, rng)
    head = np.arange(xmin, cut, dtype=np.float64)
    lz = log_hurwitz_zeta(alpha, float(xmin))
    head_pmf = np.exp(-alpha * np.log(head) - lz)
    p_tail = float(np.exp(log_hurwitz_zeta(alpha, float(cut)) - lz))
    n_tail = rng.binomial(size, min(1.0, p_tail))
    head_draws = rng.choice(head.astype(np.int64), size=size - n_tail, p=head_pmf / head_pmf.sum())
    out = np.concatenate([head_draws, _reject_discrete(alpha, cut, n_tail, rng)])
    return rng.permutation(out)


def synthetic_dataset(fit: PowerLawFit, xs, rng) -> np.ndarray:
    """Semi-parametric resample: body values reused, tail drawn from the fitted model."""
    x = np.asarray(xs, dtype=np.float64).ravel()
    body = x[x < fit.xmin]
    n = x.size
    n_tail = rng.binomial(n, fit.n_tail / n) if body.size else n
    tail = (sample_discrete(fit.alpha, int(fit.xmin), n_tail, rng) if fit.discrete
            else sample_continuous(fit.alpha, fit.xmin, n_tail, rng))
    resampled = body[rng.integers(0, body.size, n - n_tail)] if body.size else body[:0]
    return np.concatenate([resampled, tail.astype(np.float64)])


def bootstrap_pvalue(fit: PowerLawFit, xs, n_boot: int = N_BOOT, rng=None,
                     min_tail: int = MIN_TAIL) -> PowerLawFit:
    """Fraction of synthetic data sets whose refit KS is at least the observed KS.

    Each replicate draws from its own generator seeded from ``rng``, so the
    result does not depend on the order replicates are evaluated in.
    """
    if n_boot < 1:
        raise PowerLawError("n_boot must be at least 1")
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    seeds = rng.integers(0, 2 ** 63, size=n_boot)
    refit = fit_discrete if fit.discrete else fit_continuous
    exceed = 0
    for seed in seeds:
        sub = np.random.default_rng(int(seed))
        data = synthetic_dataset(fit, xs, sub)
        try:
            ks = refit(data, min_tail=min_tail).ks
        except PowerLawError:
            ks = 1.0
        exceed += ks >= fit.ks
    return replace(fit, p_value=exceed / n_boot, n_boot=n_boot)


def fit_and_test(xs, discrete: bool, n_boot: int = N_BOOT, rng=None,
                 min_tail: int = MIN_TAIL) -> PowerLawFit:
    return bootstrap_pvalue(fit(xs, discrete, min_tail), xs, n_boot, rng, min_tail)
