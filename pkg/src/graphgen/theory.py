"""Degree-distribution oracles for the triangle growth model.

The expected degree histogram E[m_{k,t}] obeys a linear recursion whose
coefficients depend on ``alpha = k / (2 e_t)``.  This module iterates that
recursion, evaluates the product-form limit ``M_k`` and the normaliser
``Gamma`` of a schedule, and collects exponent predictions for each model.

Two coefficient sets are offered.  ``"printed"`` uses the wedge-event terms
``B = 2r(1-alpha)alpha``, ``C = r(alpha - alpha^2)``, ``D = 2r alpha^2``, whose
sum exceeds one by ``r alpha^2``.  ``"exact"`` uses the probabilities obtained
by enumerating the wedge event itself, ``B = r(2 alpha - 3 alpha^2)``,
``C = r alpha``, ``D = r alpha^2``; they sum to one and conserve the degree
budget.  Both sets agree to first order in alpha, so they share the same
limit.  Self-loop shares theta are taken as 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .generators import (BA, GPAAvin, GPAContract, GeneratorError, HolmeTriad,
                         Schedule, TGPAPQ, TGPASchedule)

COEFFICIENTS = ("printed", "exact")


@dataclass
class RecursionState:
    """Expected degree histogram ``m[k]`` for ``1 <= k <= kmax`` at step ``t``.

    Nodes whose degree would exceed ``kmax`` move to an overflow bucket that
    keeps their count and total degree, so ``sum_k k m[k] + overflow_degree``
    stays equal to ``2 e_t`` whenever the coefficients conserve degree.
    """

    m: np.ndarray
    t: int = 0
    e0: float = 0.0
    n0: float = 0.0
    y_sum: float = 0.0
    overflow_nodes: float = 0.0
    overflow_degree: float = 0.0

    @property
    def kmax(self) -> int:
        return len(self.m) - 1

    @property
    def e_t(self) -> float:
        return self.e0 + 2.0 * self.t

    @property
    def n_t(self) -> float:
        return self.n0 + self.y_sum

    @property
    def degree_total(self) -> float:
        k = np.arange(len(self.m))
        return float(k @ self.m) + self.overflow_degree

    @classmethod
    def empty(cls, kmax: int = 64) -> "RecursionState":
        return cls(np.zeros(kmax + 1))

    @classmethod
    def after_component(cls, kmax: int = 64) -> "RecursionState":
        """State at t=1 from an empty graph: the first step is forced to be a component wedge."""
        m = np.zeros(kmax + 1)
        m[1], m[2] = 2.0, 1.0
        return cls(m, t=1, e0=0.0, n0=0.0, y_sum=3.0)

    @classmethod
    def from_degrees(cls, degrees, kmax: int = 64) -> "RecursionState":
        """Seed from an initial graph's degree sequence (isolated nodes counted in n0 only)."""
        degrees = np.asarray(degrees, dtype=np.int64)
        if degrees.size and degrees.min() < 0:
            raise ValueError("degrees must be nonnegative")
        m = np.zeros(kmax + 1)
        inside = degrees[degrees <= kmax]
        np.add.at(m, inside, 1.0)
        m[0] = 0.0
        big = degrees[degrees > kmax]
        return cls(m, t=0, e0=float(degrees.sum()) / 2.0, n0=float(len(degrees)),
                   overflow_nodes=float(len(big)), overflow_degree=float(big.sum()))


@njit(cache=True)
def _iterate(m, t, e0, ps, rs, qs, exact, over_n, over_d):
    kmax = m.shape[0] - 1
    new = np.empty_like(m)
    for step in range(ps.shape[0]):
        p = ps[step]
        r = rs[step]
        q = qs[step]
        two_e = 2.0 * (e0 + 2.0 * t)
        inv = 1.0 / two_e if two_e > 0 else 0.0
        new[:] = 0.0
        leaving_n = 0.0
        leaving_d = 0.0
        for k in range(1, kmax + 1):
            mk = m[k]
            if mk == 0.0:
                continue
            a = k * inv
            A = p * (1 - 2 * a) + r * (1 - a) * (1 - 2 * a) + q
            if exact:
                B = 2 * p * a + r * (2 * a - 3 * a * a)
                C = r * a
                D = r * a * a
            else:
                B = 2 * p * a + 2 * r * (1 - a) * a
                C = r * (a - a * a)
                D = 2 * r * a * a
            new[k] += mk * A
            for jump, coef in ((1, B), (2, C), (3, D)):
                if k + jump <= kmax:
                    new[k + jump] += mk * coef
                else:
                    leaving_n += mk * coef
                    leaving_d += mk * coef * (k + jump)
        # overflow nodes gain on average (2p + 4r) alpha per step
        over_d = over_d * (1.0 + (2 * p + 4 * r) * inv) + leaving_d
        over_n += leaving_n
        new[1] += 2 * q
        if kmax >= 2:
            new[2] += p + q
        else:
            over_n += p + q
            over_d += 2 * (p + q)
        m[:] = new
        t += 1
    return t, over_n, over_d


def recursion_step(s: RecursionState, p: float, r: float, q: float,
                   coefficients: str = "printed") -> RecursionState:
    """One expected-value update ``E[m_{k,t+1}] = E[m_{k,t}] A_{k,t} + E[X_{k,t}]``."""
    for name, v in (("p", p), ("r", r), ("q", q)):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"{name}={v} is not a probability")
    if abs(p + r + q - 1.0) > 1e-9:
        raise ValueError("p + r + q must equal 1")
    return iterate(s, Schedule.constant(p, r, q), 1, coefficients)


def iterate(s: RecursionState, schedule: Schedule, n_steps: int,
            coefficients: str = "printed", chunk: int = 1 << 18) -> RecursionState:
    """Advance ``s`` by ``n_steps`` steps of ``schedule`` (its step index continues from ``s.t``)."""
    if coefficients not in COEFFICIENTS:
        raise ValueError(f"coefficients must be one of {COEFFICIENTS}")
    out = replace(s, m=s.m.astype(np.float64, copy=True))
    done = 0
    while done < n_steps:
        size = min(chunk, n_steps - done)
        # step t -> t+1 uses the triple indexed t+1
        idx = np.arange(out.t + 1, out.t + size + 1)
        ps, rs, qs = (np.ascontiguousarray(a, dtype=np.float64) for a in schedule.triples(idx))
        out.y_sum += float(np.sum(ps + 3 * qs))
        out.t, out.overflow_nodes, out.overflow_degree = _iterate(
            out.m, out.t, out.e0, ps, rs, qs, coefficients == "exact",
            out.overflow_nodes, out.overflow_degree)
        done += size
    return out


def run_recursion(schedule: Schedule, t_max: int, kmax: int = 64,
                  coefficients: str = "printed", state: RecursionState | None = None
                  ) -> RecursionState:
    """Iterate from ``state`` (default: the forced first component event) until step ``t_max``."""
    s = RecursionState.after_component(kmax) if state is None else state
    return iterate(s, schedule, max(0, t_max - s.t), coefficients)


def beta_of(gamma: float, y: float) -> float:
    """Exponent ``1 + 2 Gamma / (3 - y)`` used by the product form."""
    return 1.0 + 2.0 * gamma / (3.0 - y)


def mk_closed_form(gamma: float, y: float, k: int | np.ndarray):
    """``M_k = Gamma / (Gamma + 3/2 - y/2) * prod_{j<k} j / (j + beta)``.

    The product is ``Gamma(1 + beta) / poch(k, beta)``; log-gamma takes over where the
    Pochhammer symbol overflows.  Accepts an array of ``k``.
    """
    if not gamma > 0:
        raise ValueError("Gamma must be positive")
    if not y < 3:
        raise ValueError("y must be below 3")
    k_arr = np.asarray(k)
    if np.any(k_arr < 1) or np.any(k_arr != np.floor(k_arr)):
        raise ValueError("k must be a positive integer")
    beta = beta_of(gamma, y)
    from scipy.special import gammaln, poch
    kk = k_arr.astype(np.float64)
    rising = poch(kk, beta)
    # exp of a log-gamma difference loses ~1e-10 relative accuracy at k ~ 1e5
    prod = np.where(np.isfinite(rising), np.exp(gammaln(1.0 + beta)) / rising,
                    np.exp(gammaln(kk) + gammaln(1.0 + beta) - gammaln(kk + beta)))
    out = gamma / (gamma + 1.5 - y / 2.0) * prod
    return float(out) if np.ndim(k) == 0 else out


def mk_stationary(p: float, r: float, q: float, k_max: int, gamma: float = 1.0) -> np.ndarray:
    """Limit of ``m_{k,t} / n_t`` for the printed recursion with a constant triple.

    First-order balance of the recursion (terms of order ``alpha^2`` vanish):
    ``L_k (Gamma + k (2p+3r)/4) = (k-1)(p+r)/2 L_{k-1} + (k-2) r/4 L_{k-2} + Gamma s_k / y``
    with sources ``s_1 = 2q`` and ``s_2 = p + q``.  Returns ``L[1..k_max]`` at index 0..k_max-1.
    The tail decays like ``k ** -(1 + 2 Gamma / (p + 2r))``.
    """
    y = p + 3 * q
    if not y > 0:
        raise ValueError("p + 3q must be positive")
    src = np.zeros(k_max + 1)
    src[1] = 2 * q
    if k_max >= 2:
        src[2] = p + q
    L = np.zeros(k_max + 1)
    for k in range(1, k_max + 1):
        rhs = gamma * src[k] / y
        if k >= 2:
            rhs += (k - 1) * (p + r) / 2 * L[k - 1]
        if k >= 3:
            rhs += (k - 2) * r / 4 * L[k - 2]
        L[k] = rhs / (gamma + k * (2 * p + 3 * r) / 4)
    return L[1:]


def beta_recursion(gamma: float, p: float, r: float) -> float:
    """Tail exponent of :func:`mk_stationary`: ``1 + 2 Gamma / (p + 2r)``."""
    if not p + 2 * r > 0:
        raise ValueError("p + 2r must be positive")
    return 1.0 + 2.0 * gamma / (p + 2 * r)


@dataclass(frozen=True)
class GammaEstimate:
    gamma: float
    change: float  # |Gamma(t_max) - Gamma(t_max / 2)|


def gamma_of_schedule(schedule: Schedule, t_max: int = 10 ** 6) -> GammaEstimate:
    """``t y_{t+1} / sum_{j<=t} y_j`` at ``t = t_max``, with the change since ``t_max / 2``."""
    if t_max < 1000:
        raise ValueError("t_max must be at least 1000")
    y = schedule.y(np.arange(1, t_max + 2, dtype=np.float64))
    csum = np.cumsum(y)

    def at(t):
        if csum[t - 1] <= 0:
            raise ValueError("schedule has zero total node growth")
        return t * y[t] / csum[t - 1]

    g = float(at(t_max))
    return GammaEstimate(g, abs(g - float(at(t_max // 2))))


def _limit_triple(schedule: Schedule, t: float = 1e12):
    p, r, q = (float(v) for v in schedule.triples(t))
    return p, r, q


def beta_predictions(model) -> dict:
    """Degree and eigenvalue exponents predicted for ``model`` with provenance tags.

    ``provenance`` is ``"paper"`` for an exponent the source analysis states,
    ``"derived"`` for one obtained here.  The eigenvalue exponent is always
    ``2 beta - 1`` (from ``lambda_i ~ sqrt(Delta_i)``) and tagged derived.
    Schedule models also report ``beta_degrees_recursion``, the tail of the
    printed recursion itself (:func:`beta_recursion`).
    """
    extra = {}
    if isinstance(model, GPAContract):
        if model.p == 0:
            raise ValueError("p must be positive")
        beta, tag = (2 + model.p) / model.p, "paper"
    elif isinstance(model, GPAAvin):
        if model.p + 2 * model.r == 0:
            raise ValueError("p + 2r must be positive")
        beta, tag = 1 + 2 / (model.p + 2 * model.r), "derived"
    elif isinstance(model, TGPAPQ):
        if model.p == 0:
            raise ValueError("p must be positive")
        beta, tag = 1 + 1 / model.p, "derived"
        extra["beta_degrees_meanfield"] = 1 + 2 / model.p
    elif isinstance(model, TGPASchedule):
        sched = model.schedule
        gamma = gamma_of_schedule(sched, 10 ** 6).gamma if _decays(sched) else 1.0
        p, r, q = _limit_triple(sched)
        y = p + 3 * q
        beta, tag = beta_of(gamma, y), "paper"
        extra["gamma"] = gamma
        extra["beta_degrees_recursion"] = beta_recursion(gamma, p, r)
    elif isinstance(model, BA):
        beta, tag = 3.0, "paper"
    elif isinstance(model, HolmeTriad):
        beta, tag = 3.0, "derived"
    else:
        raise GeneratorError(f"no prediction for {model!r}")
    return {"beta_degrees": beta, "beta_eigenvalues": 2 * beta - 1,
            "provenance": tag, **extra}


def _decays(schedule: Schedule) -> bool:
    return schedule.kind == "target_exponent" and schedule.regime != "constant"
