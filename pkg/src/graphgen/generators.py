"""Preferential-attachment growth processes (BA, Holme-Kim, GPA, TGPA) driven by a seeded RNG."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _kernels
from .graph import GraphError, GraphSpec, MultiGraph

_NO_TARGET = np.iinfo(np.int64).max
_PROB_TOL = 1e-9


class GeneratorError(ValueError):
    """Invalid generator configuration or unreachable stopping rule."""


def _check_prob(name, value):
    if not (0.0 <= value <= 1.0) or math.isnan(value):
        raise GeneratorError(f"{name}={value} is not a probability")


def _check_simplex(p, r, q):
    for name, v in (("p", p), ("r", r), ("q", q)):
        _check_prob(name, v)
    if abs(p + r + q - 1.0) > _PROB_TOL:
        raise GeneratorError(f"p + r + q must equal 1, got {p + r + q}")


# ---------------------------------------------------------------------------
# schedules


def split_y(y):
    """Split ``y = p + 3q`` into ``(p, r, q)``, taking ``p`` as large as feasible."""
    y = np.asarray(y, dtype=np.float64)
    p = np.minimum(y, (3.0 - y) / 2.0)
    q = np.maximum(0.0, (y - 1.0) / 2.0)
    r = np.clip(1.0 - p - q, 0.0, 1.0)
    return p, r, q


@dataclass(frozen=True)
class Schedule:
    """Rule ``t -> (p_t, r_t, q_t)`` for t = 1, 2, ...

    ``constant`` repeats one triple, ``table`` walks a list of triples and then
    holds the last one, ``target_exponent`` follows the three regimes in ``x``
    for the node-growth statistic ``y_t = p_t + 3 q_t`` (see
    :func:`schedule_for_exponent`).
    """

    kind: str
    triple: tuple = (1.0, 0.0, 0.0)
    x: float = 0.0
    table: tuple = ()
    rule: str = "y-split"

    def __post_init__(self):
        if self.kind == "constant":
            _check_simplex(*self.triple)
        elif self.kind == "table":
            if not self.table:
                raise GeneratorError("table schedule needs at least one row")
            for row in self.table:
                _check_simplex(*row)
        elif self.kind == "target_exponent":
            if not self.x > 1:
                raise GeneratorError(f"target exponent must exceed 1, got {self.x}")
            if self.rule not in SCHEDULE_RULES:
                raise GeneratorError(f"rule must be one of {SCHEDULE_RULES}")
        else:
            raise GeneratorError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, p, r, q) -> "Schedule":
        return cls("constant", triple=(float(p), float(r), float(q)))

    @classmethod
    def target_exponent(cls, x, rule: str = "y-split") -> "Schedule":
        return cls("target_exponent", x=float(x), rule=rule)

    @classmethod
    def from_table(cls, rows) -> "Schedule":
        return cls("table", table=tuple(tuple(float(v) for v in row) for row in rows))

    @property
    def regime(self) -> str | None:
        if self.kind != "target_exponent":
            return None
        if abs(self.x - 5.0 / 3.0) < 1e-9:
            return "log"
        return "constant" if self.x > 5.0 / 3.0 else "power"

    def y(self, t) -> np.ndarray:
        """Expected new nodes per step, ``p_t + 3 q_t``."""
        p, _, q = self.triples(t)
        return p + 3.0 * q

    def triples(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "constant":
            p, r, q = self.triple
            return np.full(t.shape, p), np.full(t.shape, r), np.full(t.shape, q)
        if self.kind == "table":
            rows = np.asarray(self.table)
            idx = np.minimum(t.astype(np.int64) - 1, len(rows) - 1)
            idx = np.maximum(idx, 0)
            return rows[idx, 0], rows[idx, 1], rows[idx, 2]
        if self.rule == "growth-rate":
            return _growth_rate_triples(self.x, t)
        regime = self.regime
        if regime == "constant":
            y = np.full(t.shape, 3.0 - 2.0 / (self.x - 1.0))
        elif regime == "power":
            y = t ** (1.5 * (self.x - 5.0 / 3.0))
        else:
            y = 1.0 / np.log(t + 2.0)
        return split_y(y)

    def token(self) -> str:
        """Lossless text form accepted by :meth:`parse`."""
        if self.kind == "constant":
            return "constant:" + ",".join(repr(v) for v in self.triple)
        if self.kind == "target_exponent":
            suffix = "" if self.rule == "y-split" else f"@{self.rule}"
            return f"exponent:{self.x!r}{suffix}"
        return "table:" + ";".join(",".join(repr(v) for v in row) for row in self.table)

    @classmethod
    def parse(cls, text: str) -> "Schedule":
        """Parse ``constant:p,r,q``, ``exponent:x`` or ``table:p,r,q;p,r,q;...``."""
        kind, _, body = text.partition(":")
        try:
            if kind == "constant":
                return cls.constant(*[float(v) for v in body.split(",")])
            if kind in ("exponent", "target_exponent"):
                value, _, rule = body.partition("@")
                return cls.target_exponent(_parse_float(value), rule or "y-split")
            if kind == "table":
                return cls.from_table([[float(v) for v in row.split(",")]
                                       for row in body.split(";") if row.strip()])
        except (TypeError, ValueError) as exc:
            raise GeneratorError(f"bad schedule {text!r}: {exc}") from None
        raise GeneratorError(f"unknown schedule {text!r}")


SCHEDULE_RULES = ("y-split", "growth-rate")


def _growth_rate_triples(x, t):
    """Triples whose recursion tail exponent ``1 + 2 Gamma / (p + 2r)`` equals ``x``.

    For x > 2 the triple is constant with ``p + 2r = 2/(x-1)`` (wedge events
    for x < 3, component events for x > 3).  For x < 2 node events decay as
    ``y_t = t**(x-2)`` (so Gamma = x - 1), at x = 2 as ``1/ln(t+2)`` (Gamma = 1),
    and the remaining mass goes to wedge events.
    """
    if x > 2:
        g = 2.0 / (x - 1.0)
        if g >= 1:
            p, r, q = 2.0 - g, g - 1.0, 0.0
        else:
            p, r, q = g, 0.0, 1.0 - g
        return np.full(t.shape, p), np.full(t.shape, r), np.full(t.shape, q)
    y = 1.0 / np.log(t + 2.0) if x == 2 else t ** (x - 2.0)
    y = np.minimum(1.0, y)
    return y, 1.0 - y, np.zeros(t.shape)


def _parse_float(text: str) -> float:
    text = text.strip()
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def schedule_for_exponent(x: float, rule: str = "y-split") -> Schedule:
    """Time-varying (p_t, r_t, q_t) whose node-growth statistic targets exponent ``x``.

    With the default ``rule="y-split"``, x > 5/3 uses the constant
    ``y = 3 - 2/(x-1)``, x < 5/3 the decaying ``y_t = t**(1.5 (x - 5/3))`` and
    x = 5/3 exactly ``y_t = 1/ln(t+2)``; each ``y_t`` is split by
    :func:`split_y`.  These choices target ``1 + 2 Gamma / (3 - y)``.

    ``rule="growth-rate"`` instead targets the tail exponent of the degree
    recursion, ``1 + 2 Gamma / (p + 2r)``, which is what simulations follow.
    """
    if not x > 1:
        raise GeneratorError(f"target exponent must exceed 1, got {x}")
    return Schedule.target_exponent(x, rule)


def expected_steps(schedule: Schedule, n_nodes: float, t0: int = 0,
                   limit: float = 1e11) -> int:
    """Smallest T with sum_{t0 < j <= t0+T} y_j >= n_nodes, or raise if beyond ``limit``."""
    if n_nodes <= 0:
        return 0
    if schedule.kind == "target_exponent":
        # y_t is nonincreasing here, so block [2^i, 2^(i+1)) adds at most 2^i y(2^i)
        lo = 2.0 ** np.arange(0, math.ceil(math.log2(t0 + limit + 1)) + 1)
        lo = lo[lo < t0 + limit + 1]
        hi = np.minimum(2 * lo, t0 + limit + 1)
        if float(((hi - lo) * schedule.y(lo)).sum()) < n_nodes:
            raise GeneratorError(f"{n_nodes} nodes not reachable within {limit:g} steps")
    total, start, chunk = 0.0, t0 + 1, 1 << 16
    while start - t0 <= limit:
        t = np.arange(start, start + chunk, dtype=np.float64)
        c = total + np.cumsum(schedule.y(t))
        hit = np.searchsorted(c, n_nodes)
        if hit < chunk:
            return int(start + hit - t0)
        if c[-1] <= 0:
            raise GeneratorError("schedule never adds nodes")
        total = float(c[-1])
        start += chunk
        chunk = min(chunk * 2, 1 << 24)
    raise GeneratorError(f"{n_nodes} nodes not reachable within {limit:g} steps")


# ---------------------------------------------------------------------------
# model descriptions


@dataclass(frozen=True)
class BA:
    m_edges: int = 1
    name = "ba"


@dataclass(frozen=True)
class HolmeTriad:
    m_edges: int = 2
    p_triad: float = 0.5
    name = "holme"


@dataclass(frozen=True)
class GPAAvin:
    p: float = 1.0
    r: float = 0.0
    q: float = 0.0
    name = "gpa-avin"


@dataclass(frozen=True)
class GPAContract:
    p: float = 1.0
    m: int = 1
    name = "gpa-contract"


@dataclass(frozen=True)
class TGPAPQ:
    p: float = 1.0
    m: int = 1
    name = "tgpa-pq"


@dataclass(frozen=True)
class TGPASchedule:
    schedule: Schedule = field(default_factory=lambda: Schedule.constant(1, 0, 0))
    close_triangle: bool = False
    name = "tgpa-schedule"


Model = Union[BA, HolmeTriad, GPAAvin, GPAContract, TGPAPQ, TGPASchedule]
MODEL_TOKENS = ("ba", "holme", "gpa-avin", "gpa-contract", "tgpa-pq", "tgpa-schedule")


@dataclass(frozen=True)
class Stop:
    """Either run ``steps`` growth steps or stop once ``nodes`` nodes exist."""

    steps: int | None = None
    nodes: int | None = None

    def __post_init__(self):
        if (self.steps is None) == (self.nodes is None):
            raise GeneratorError("give exactly one of steps / nodes")
        if (self.steps or 0) < 0 or (self.nodes is not None and self.nodes < 0):
            raise GeneratorError("stop value must be nonnegative")


@dataclass(frozen=True)
class GeneratorConfig:
    model: Model
    stop: Stop
    init: GraphSpec = field(default_factory=GraphSpec.empty)
    seed: int = 0

    def __post_init__(self):
        validate_model(self.model)
        if not 0 <= int(self.seed) < 2 ** 64:
            raise GeneratorError("seed must be a 64-bit unsigned integer")


def validate_model(model: Model) -> None:
    if isinstance(model, BA):
        if model.m_edges < 1:
            raise GeneratorError("m_edges must be >= 1")
    elif isinstance(model, HolmeTriad):
        if model.m_edges < 1:
            raise GeneratorError("m_edges must be >= 1")
        _check_prob("p_triad", model.p_triad)
    elif isinstance(model, GPAAvin):
        _check_simplex(model.p, model.r, model.q)
    elif isinstance(model, (GPAContract, TGPAPQ)):
        _check_prob("p", model.p)
        if model.m < 1:
            raise GeneratorError("m must be >= 1")
    elif isinstance(model, TGPASchedule):
        pass  # Schedule validates itself
    else:
        raise GeneratorError(f"unknown model {model!r}")


# ---------------------------------------------------------------------------
# single steps


@dataclass
class GrowthState:
    """Step counter plus the PA vertices still awaiting contraction."""

    m: int = 1
    t: int = 0
    roster: np.ndarray = None
    n_roster: int = 0

    def __post_init__(self):
        if self.roster is None:
            self.roster = np.empty(max(self.m, 1), dtype=np.int32)


def _seeded(rng):
    return rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)


def step_gpa_avin(g: MultiGraph, p: float, r: float, q: float, rng) -> None:
    """One node, edge or component event; falls back to a component event on an empty graph."""
    _check_simplex(p, r, q)
    g.reserve(1, 2)
    out = _kernels.grow_gpa_avin(g._ends, g.n_edges, g._label, g.id_bound, g.node_count,
                                 p, r, 1, _NO_TARGET, _seeded(rng))
    g._sync(*out[:3])


def step_gpa_contract(g: MultiGraph, p: float, m: int, rng, state: GrowthState) -> None:
    g.reserve(1, 2)
    out = _kernels.grow_gpa_contract(g._ends, g.n_edges, g._label, g.id_bound, g.node_count,
                                     state.roster, state.n_roster, p, m, 1, _NO_TARGET,
                                     _seeded(rng))
    g._sync(*out[:3])
    state.n_roster = int(out[3])
    state.t += 1


def step_tgpa_pq(g: MultiGraph, p: float, m: int, rng, state: GrowthState) -> None:
    g.reserve(2, 3)
    out = _kernels.grow_tgpa_pq(g._ends, g.n_edges, g._label, g.id_bound, g.node_count,
                                state.roster, state.n_roster, p, m, 1, _NO_TARGET,
                                _seeded(rng))
    g._sync(*out[:3])
    state.n_roster = int(out[3])
    state.t += 1


def step_tgpa_schedule(g: MultiGraph, p_t: float, r_t: float, q_t: float, rng,
                       close_triangle: bool = False) -> None:
    """One node / wedge / component event of the time-varying triangle model."""
    _check_simplex(p_t, r_t, q_t)
    g.reserve(2, 3)
    out = _kernels.grow_tgpa_schedule(g._ends, g.n_edges, g._label, g.id_bound,
                                      g.node_count, np.array([p_t]), np.array([r_t]),
                                      close_triangle, _NO_TARGET, _seeded(rng))
    g._sync(*out[:3])


def step_ba(g: MultiGraph, m_edges: int, rng) -> None:
    if g.n_edges == 0:
        raise GeneratorError("BA growth needs a seed graph with at least one edge")
    g.reserve(m_edges, 1)
    out = _kernels.grow_ba(g._ends, g.n_edges, g._label, g.id_bound, g.node_count,
                           m_edges, 1, _NO_TARGET, _seeded(rng))
    g._sync(*out[:3])


class HolmeState:
    """Neighbour lists kept alongside the multigraph for triad-formation steps."""

    def __init__(self, g: MultiGraph):
        self.nbrs: list[list[int]] = [[] for _ in range(g.id_bound)]
        for u, v in g.edges:
            self.nbrs[u].append(int(v))
            if u != v:
                self.nbrs[v].append(int(u))
        self.triads = 0


def step_holme(g: MultiGraph, m_edges: int, p_triad: float, rng,
               state: HolmeState | None = None) -> int:
    """Add one vertex with ``m_edges`` links; returns how many were triad closures.

    The first link is preferential.  Each further link, with probability
    ``p_triad``, goes to a uniform neighbour of the last preferential target
    that is not yet linked to the new vertex; otherwise (or when no such
    neighbour exists) it is another preferential link.
    """
    if g.n_edges == 0:
        raise GeneratorError("Holme-Kim growth needs a seed graph with at least one edge")
    rng = _seeded(rng)
    if state is None:
        state = HolmeState(g)
    n_slots = 2 * g.n_edges
    ends, label = g._ends, g._label

    def pa_target(exclude):
        for _ in range(64):
            u = int(label[ends[rng.integers(0, n_slots)]])
            if u not in exclude:
                return u
        return u

    v = g.add_node()
    state.nbrs.append([])
    linked: set[int] = set()
    anchor = pa_target(linked)
    targets = [anchor]
    linked.add(anchor)
    closures = 0
    for _ in range(m_edges - 1):
        target = None
        if rng.random() < p_triad:
            options = [w for w in state.nbrs[anchor] if w not in linked and w != v]
            if options:
                target = options[rng.integers(0, len(options))]
                closures += 1
        if target is None:
            target = pa_target(linked)
            anchor = target
        targets.append(target)
        linked.add(target)
    for u in targets:
        g.add_edge(v, u)
        state.nbrs[v].append(u)
        state.nbrs[u].append(v)
    state.triads += closures
    return closures


# ---------------------------------------------------------------------------
# full runs


def node_rate(model: Model) -> float:
    """Expected nodes added per step for constant-rate models (after contraction)."""
    if isinstance(model, (BA, HolmeTriad)):
        return 1.0
    if isinstance(model, GPAAvin):
        return model.p + 2 * model.q
    if isinstance(model, GPAContract):
        return model.p / model.m + 2 * (1 - model.p)
    if isinstance(model, TGPAPQ):
        return model.p / model.m + 3 * (1 - model.p)
    raise GeneratorError("node rate of a scheduled model depends on t")


def edges_per_step(model: Model) -> int:
    if isinstance(model, (BA, HolmeTriad)):
        return model.m_edges
    if isinstance(model, (GPAAvin, GPAContract)):
        return 1
    return 2


def generate(config: GeneratorConfig, rng=None) -> MultiGraph:
    """Grow a multigraph from ``config``; a pure function of (config, seed) when ``rng`` is None.

    The returned graph carries ``steps``, the number of growth steps performed.
    """
    rng = np.random.default_rng(config.seed) if rng is None else _seeded(rng)
    try:
        g = config.init.build()
    except (OSError, GraphError) as exc:
        raise GeneratorError(f"cannot build initial graph: {exc}") from exc
    model, stop = config.model, config.stop

    if isinstance(model, HolmeTriad):
        return _generate_holme(g, model, stop, rng)

    if stop.steps is not None:
        budget, target = stop.steps, _NO_TARGET
    else:
        target = stop.nodes
        budget = 100 * _steps_needed(model, target - g.node_count, 0)
    state = GrowthState(getattr(model, "m", 1))
    done = 0
    while done < budget and g.node_count < target:
        if stop.steps is not None:
            chunk = budget - done
        else:
            want = _steps_needed(model, target - g.node_count, done)
            chunk = int(min(budget - done, max(1024, 1.02 * want + 256)))
        done += _advance(g, model, state, chunk, target, done, rng)
    if stop.nodes is not None and g.node_count < target:
        raise GeneratorError(
            f"target of {target} nodes unreachable within {budget} steps")
    g.steps = done
    return g


def _steps_needed(model, remaining, t0) -> int:
    if remaining <= 0:
        return 0
    if isinstance(model, TGPASchedule):
        return expected_steps(model.schedule, remaining, t0)
    rate = node_rate(model)
    if rate <= 0:
        raise GeneratorError(f"{model.name} with these parameters never adds nodes")
    return int(math.ceil(remaining / rate))


def _advance(g, model, state, n_steps, target, t0, rng) -> int:
    e_step = edges_per_step(model)
    new_nodes = n_steps if isinstance(model, BA) else 3 * n_steps
    if target != _NO_TARGET and isinstance(model, (BA, GPAAvin, TGPASchedule)):
        # no contraction: raw ids track live nodes and the last step adds at most 3
        new_nodes = min(new_nodes, max(0, target - g.node_count) + 3)
    g.reserve(e_step * n_steps, new_nodes)
    common = (g._ends, g.n_edges, g._label, g.id_bound, g.node_count)
    if isinstance(model, GPAAvin):
        out = _kernels.grow_gpa_avin(*common, model.p, model.r, n_steps, target, rng)
    elif isinstance(model, GPAContract):
        out = _kernels.grow_gpa_contract(*common, state.roster, state.n_roster, model.p,
                                         model.m, n_steps, target, rng)
        state.n_roster = int(out[3])
    elif isinstance(model, TGPAPQ):
        out = _kernels.grow_tgpa_pq(*common, state.roster, state.n_roster, model.p,
                                    model.m, n_steps, target, rng)
        state.n_roster = int(out[3])
    elif isinstance(model, TGPASchedule):
        return _advance_schedule(g, model, n_steps, target, t0, rng, state)
    elif isinstance(model, BA):
        if g.n_edges == 0:
            raise GeneratorError("BA growth needs a seed graph with at least one edge")
        out = _kernels.grow_ba(*common, model.m_edges, n_steps, target, rng)
    else:
        raise GeneratorError(f"unknown model {model!r}")
    g._sync(*out[:3])
    steps = int(out[-1])
    state.t += steps
    return steps


_SCHEDULE_CHUNK = 1 << 20


def _advance_schedule(g, model, n_steps, target, t0, rng, state) -> int:
    # the per-step triples are built a block at a time to bound memory
    done = 0
    while done < n_steps and g.node_count < target:
        size = min(_SCHEDULE_CHUNK, n_steps - done)
        ps, rs, _ = model.schedule.triples(np.arange(t0 + done + 1, t0 + done + size + 1))
        out = _kernels.grow_tgpa_schedule(g._ends, g.n_edges, g._label, g.id_bound,
                                          g.node_count, np.ascontiguousarray(ps),
                                          np.ascontiguousarray(rs), model.close_triangle,
                                          target, rng)
        g._sync(*out[:3])
        done += int(out[-1])
    state.t += done
    return done


def _generate_holme(g, model, stop, rng):
    if g.n_edges == 0:
        raise GeneratorError("Holme-Kim growth needs a seed graph with at least one edge")
    state = HolmeState(g)
    done = 0
    if stop.steps is not None:
        for _ in range(stop.steps):
            step_holme(g, model.m_edges, model.p_triad, rng, state)
        done = stop.steps
    else:
        while g.node_count < stop.nodes:
            step_holme(g, model.m_edges, model.p_triad, rng, state)
            done += 1
    g.steps = done
    g.triads = state.triads
    return g


def model_from_token(token: str, **params) -> Model:
    """Build a model from its CLI token and keyword parameters."""
    if token == "ba":
        return BA(int(params.get("m_edges", 1)))
    if token == "holme":
        return HolmeTriad(int(params.get("m_edges", 2)), float(params.get("p_triad", 0.5)))
    if token == "gpa-avin":
        p, r = float(params.get("p", 1.0)), float(params.get("r", 0.0))
        q = float(params.get("q", 1.0 - p - r))
        return GPAAvin(p, r, q)
    if token == "gpa-contract":
        return GPAContract(float(params.get("p", 1.0)), int(params.get("m", 1)))
    if token == "tgpa-pq":
        return TGPAPQ(float(params.get("p", 1.0)), int(params.get("m", 1)))
    if token == "tgpa-schedule":
        sched = params.get("schedule", "constant:1,0,0")
        if not isinstance(sched, Schedule):
            sched = Schedule.parse(str(sched))
        return TGPASchedule(sched, bool(params.get("close_triangle", False)))
    raise GeneratorError(f"unknown model token {token!r}; expected one of {MODEL_TOKENS}")
