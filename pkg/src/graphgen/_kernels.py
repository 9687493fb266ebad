"""Compiled inner loops for graph growth.

Every growth kernel works on the same storage layout as :class:`MultiGraph`:

* ``ends`` holds raw vertex ids, edge ``i`` occupying slots ``2i`` and ``2i+1``;
* ``label`` maps a raw vertex id to its current node id (contraction rewrites
  labels, never the endpoint array).

A uniform slot ``x`` gives a degree-proportional node ``label[ends[x]]``; its
partner slot ``x ^ 1`` gives a uniform incident neighbour of that node, so a
single draw yields the (u, w) pair of a triangle step.
"""
from __future__ import annotations

import numpy as np
from numba import njit

NODE, SECOND, COMPONENT = 0, 1, 2


@njit(cache=True)
def _push_edge(ends, n_edges, a, b):
    ends[2 * n_edges] = a
    ends[2 * n_edges + 1] = b
    return n_edges + 1


@njit(cache=True)
def _new_node(label, n_raw):
    label[n_raw] = n_raw
    return n_raw + 1


@njit(cache=True)
def _pick(ends, label, n_edges, rng):
    return label[ends[rng.integers(0, 2 * n_edges)]]


@njit(cache=True)
def grow_gpa_avin(ends, n_edges, label, n_raw, n_alive, p, r, n_steps,
                  target_nodes, rng):
    """Node / edge / component events with one edge per step."""
    done = 0
    while done < n_steps and n_alive < target_nodes:
        x = rng.random()
        event = NODE if x < p else (SECOND if x < p + r else COMPONENT)
        if n_edges == 0:
            event = COMPONENT
        if event == NODE:
            u = _pick(ends, label, n_edges, rng)
            v = n_raw
            n_raw = _new_node(label, n_raw)
            n_alive += 1
            n_edges = _push_edge(ends, n_edges, v, u)
        elif event == SECOND:
            u = _pick(ends, label, n_edges, rng)
            w = _pick(ends, label, n_edges, rng)
            n_edges = _push_edge(ends, n_edges, u, w)
        else:
            a = n_raw
            n_raw = _new_node(label, n_raw)
            b = n_raw
            n_raw = _new_node(label, n_raw)
            n_alive += 2
            n_edges = _push_edge(ends, n_edges, a, b)
        done += 1
    return n_edges, n_raw, n_alive, done


@njit(cache=True)
def _contract_roster(label, roster, m):
    root = roster[0]
    for i in range(1, m):
        label[roster[i]] = root


@njit(cache=True)
def grow_gpa_contract(ends, n_edges, label, n_raw, n_alive, roster, n_roster,
                      p, m, n_steps, target_nodes, rng):
    """PA step with a self-loop option of weight 1; contraction of every m PA vertices."""
    done = 0
    while done < n_steps and n_alive < target_nodes:
        if rng.random() < p:
            v = n_raw
            n_raw = _new_node(label, n_raw)
            n_alive += 1
            x = rng.integers(0, 2 * n_edges + 1)
            if x == 2 * n_edges:
                u = v
            else:
                u = label[ends[x]]
            n_edges = _push_edge(ends, n_edges, v, u)
            roster[n_roster] = v
            n_roster += 1
            if n_roster == m:
                _contract_roster(label, roster, m)
                n_alive -= m - 1
                n_roster = 0
        else:
            a = n_raw
            n_raw = _new_node(label, n_raw)
            b = n_raw
            n_raw = _new_node(label, n_raw)
            n_alive += 2
            n_edges = _push_edge(ends, n_edges, a, b)
        done += 1
    return n_edges, n_raw, n_alive, n_roster, done


@njit(cache=True)
def _triangle_node_event(ends, n_edges, label, n_raw, rng):
    # u has weight d(u)/(2e+2); the new vertex itself has weight 2/(2e+2)
    v = n_raw
    n_raw = _new_node(label, n_raw)
    x = rng.integers(0, 2 * n_edges + 2)
    if x >= 2 * n_edges:
        u = v
        w = v
    else:
        u = label[ends[x]]
        w = label[ends[x ^ 1]]
    n_edges = _push_edge(ends, n_edges, v, u)
    n_edges = _push_edge(ends, n_edges, v, w)
    return n_edges, n_raw, v


@njit(cache=True)
def _wedge_component(ends, n_edges, label, n_raw):
    a = n_raw
    n_raw = _new_node(label, n_raw)
    b = n_raw
    n_raw = _new_node(label, n_raw)
    c = n_raw
    n_raw = _new_node(label, n_raw)
    n_edges = _push_edge(ends, n_edges, a, b)
    n_edges = _push_edge(ends, n_edges, b, c)
    return n_edges, n_raw


@njit(cache=True)
def grow_tgpa_pq(ends, n_edges, label, n_raw, n_alive, roster, n_roster,
                 p, m, n_steps, target_nodes, rng):
    done = 0
    while done < n_steps and n_alive < target_nodes:
        if rng.random() < p:
            n_edges, n_raw, v = _triangle_node_event(ends, n_edges, label, n_raw, rng)
            n_alive += 1
            roster[n_roster] = v
            n_roster += 1
            if n_roster == m:
                _contract_roster(label, roster, m)
                n_alive -= m - 1
                n_roster = 0
        else:
            n_edges, n_raw = _wedge_component(ends, n_edges, label, n_raw)
            n_alive += 3
        done += 1
    return n_edges, n_raw, n_alive, n_roster, done


@njit(cache=True)
def grow_tgpa_schedule(ends, n_edges, label, n_raw, n_alive, ps, rs,
                       close_triangle, target_nodes, rng):
    """Run ``len(ps)`` steps of the time-varying model (or stop at the node target)."""
    done = 0
    n_steps = ps.shape[0]
    while done < n_steps and n_alive < target_nodes:
        x = rng.random()
        p = ps[done]
        event = NODE if x < p else (SECOND if x < p + rs[done] else COMPONENT)
        if n_edges == 0:
            event = COMPONENT
        if event == NODE:
            n_edges, n_raw, v = _triangle_node_event(ends, n_edges, label, n_raw, rng)
            n_alive += 1
        elif event == SECOND:
            s = rng.integers(0, 2 * n_edges)
            v1 = label[ends[s]]
            w = label[ends[s ^ 1]]
            v2 = _pick(ends, label, n_edges, rng)
            n_edges = _push_edge(ends, n_edges, v1, v2)
            if close_triangle:
                n_edges = _push_edge(ends, n_edges, v2, w)
            else:
                n_edges = _push_edge(ends, n_edges, v1, w)
        else:
            n_edges, n_raw = _wedge_component(ends, n_edges, label, n_raw)
            n_alive += 3
        done += 1
    return n_edges, n_raw, n_alive, done


@njit(cache=True)
def grow_ba(ends, n_edges, label, n_raw, n_alive, m_edges, n_steps,
            target_nodes, rng):
    done = 0
    while done < n_steps and n_alive < target_nodes:
        v = n_raw
        n_raw = _new_node(label, n_raw)
        n_alive += 1
        e_before = n_edges
        for _ in range(m_edges):
            u = label[ends[rng.integers(0, 2 * e_before)]]
            n_edges = _push_edge(ends, n_edges, v, u)
        done += 1
    return n_edges, n_raw, n_alive, done


@njit(cache=True)
def multi_degrees(ends, n_edges, label, n_raw):
    deg = np.zeros(n_raw, dtype=np.int64)
    for i in range(2 * n_edges):
        deg[label[ends[i]]] += 1
    return deg
