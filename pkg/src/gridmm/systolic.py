"""Functional executor and timing models for the PE grid.

Two independent timing routes are kept deliberately separate: closed-form
latency formulas (timing_classical / timing_3d) and a discrete-event
simulator (event_sim_timing) that physically propagates operand bundles
through register chains. The test suite holds them to exact agreement.
"""

from __future__ import annotations

import csv
import heapq
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .arch import ArchShape, LatencyProfile, ModelError, DEFAULT_LATENCY

__all__ = [
    "TimingReport",
    "systolic_block_mac",
    "block_mac_fast",
    "timing_classical",
    "timing_3d",
    "event_sim_timing",
    "wavefront_trace",
    "write_trace_csv",
]


@dataclass(frozen=True)
class TimingReport:
    """Cycle accounting for one pipelined loop at initiation interval 1.

    `fill` is the wavefront skew (d0_i + d0_j - 1), `l_body` the latency of
    one loop body, and l_tot == l_body + iterations always holds.
    """

    l_body: int
    l_tot: int
    fill: int
    iterations: int


def _as_f32(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float32)
    if arr.ndim != 2:
        raise ModelError(f"{name} must be 2-D, got ndim={arr.ndim}")
    return arr


def systolic_block_mac(c, a0, b0, on_step: Callable | None = None) -> np.ndarray:
    """C + A0 @ B0 by literal wavefront execution over the PE grid.

    Sweeps the activation front: at step k, PE (i, j) is active iff
    i + j <= k < i + j + d0_k; it takes its A operand from the west
    neighbour's register (or the A feed at column 0), its B operand from
    the north (or the B feed at row 0), and accumulates one product.
    The descending i/j sweep makes each PE read the value its neighbour
    held at the *previous* step, i.e. register semantics. Per output
    element the products land in ascending k, so the result is bitwise
    the reference chain.

    `on_step(k, active, a_reg, b_reg)` is called after each step with the
    list of active PE coordinates and snapshots of the propagation
    registers; tests use it to check the guard and hop properties.
    """
    c = _as_f32(c, "C").copy()
    a0 = _as_f32(a0, "A0")
    b0 = _as_f32(b0, "B0")
    di, dj = c.shape
    dk = a0.shape[1]
    if a0.shape != (di, dk) or b0.shape != (dk, dj):
        raise ModelError(
            f"block shapes {a0.shape} x {b0.shape} -> {c.shape} are inconsistent"
        )

    a_reg = np.zeros((di, dj), dtype=np.float32)
    b_reg = np.zeros((di, dj), dtype=np.float32)
    for k in range(di + dj + dk - 2):
        active = []
        for i in range(di - 1, -1, -1):
            for j in range(dj - 1, -1, -1):
                if i + j <= k < i + j + dk:
                    a_reg[i, j] = a_reg[i, j - 1] if j else a0[i, k - i]
                    b_reg[i, j] = b_reg[i - 1, j] if i else b0[k - j, j]
                    c[i, j] += a_reg[i, j] * b_reg[i, j]
                    active.append((i, j))
        if on_step is not None:
            on_step(k, active, a_reg.copy(), b_reg.copy())
    return c


def block_mac_fast(c, a0, b0) -> np.ndarray:
    """Order-identical fast path for C + A0 @ B0.

    One rank-1 update per k step, each element receiving exactly one
    rounded multiply and one rounded add per step, so the result is
    bitwise equal to systolic_block_mac.
    """
    c = _as_f32(c, "C").copy()
    a0 = _as_f32(a0, "A0")
    b0 = _as_f32(b0, "B0")
    if a0.shape[0] != c.shape[0] or b0.shape[1] != c.shape[1] or a0.shape[1] != b0.shape[0]:
        raise ModelError(
            f"block shapes {a0.shape} x {b0.shape} -> {c.shape} are inconsistent"
        )
    for k in range(a0.shape[1]):
        c += a0[:, k : k + 1] * b0[k : k + 1, :]
    return c


def timing_classical(
    d0_i: int, d0_j: int, k_extent: int, lat: LatencyProfile = DEFAULT_LATENCY
) -> TimingReport:
    """Total latency of a 2-D grid of multiply-accumulate PEs."""
    if min(d0_i, d0_j, k_extent) < 1:
        raise ModelError("grid sizes and K must be >= 1")
    fill = d0_i + d0_j - 1
    l_body = fill + lat.l_mac
    return TimingReport(l_body=l_body, l_tot=l_body + k_extent, fill=fill, iterations=k_extent)


def timing_3d(
    shape: ArchShape, k_extent: int, lat: LatencyProfile = DEFAULT_LATENCY
) -> TimingReport:
    """Total latency of the layered grid of dot units, closed form."""
    if k_extent < 1 or k_extent % shape.d0_k:
        raise ModelError(f"K={k_extent} must be a positive multiple of d0_k={shape.d0_k}")
    iterations = k_extent // shape.d0_k
    fill = shape.d0_i + shape.d0_j - 1
    l_body = fill + shape.layers * lat.dot_latency(shape.d_p)
    return TimingReport(l_body=l_body, l_tot=l_body + iterations, fill=fill, iterations=iterations)


def event_sim_timing(
    shape: ArchShape, k_extent: int, lat: LatencyProfile = DEFAULT_LATENCY
) -> TimingReport:
    """Measure total latency by discrete-event simulation.

    Operand bundles enter on the two input faces, skewed one cycle per
    row/column and one dot latency per layer, then hop one register per
    cycle toward their PE. A PE fires when its A bundle, B bundle, and the
    partial sum from the layer below land in the same cycle (the simulator
    raises if they ever disagree, and if any register would carry two
    values in one cycle). Results leave the top layer one hop after the
    dot unit finishes. Cycle counting is 1-based from the first injection.
    """
    if k_extent < 1 or k_extent % shape.d0_k:
        raise ModelError(f"K={k_extent} must be a positive multiple of d0_k={shape.d0_k}")
    di, dj = shape.d0_i, shape.d0_j
    layers = shape.layers
    l_dot = lat.dot_latency(shape.d_p)
    iters = k_extent // shape.d0_k

    events: list[tuple[int, int, str, tuple]] = []
    seq = 0

    def push(t: int, kind: str, payload: tuple) -> None:
        nonlocal seq
        heapq.heappush(events, (t, seq, kind, payload))
        seq += 1

    for t_iter in range(iters):
        for lay in range(layers):
            base = t_iter + lay * l_dot
            for i in range(di):
                push(base + i, "a", (i, 0, lay, t_iter))
            for j in range(dj):
                push(base + j, "b", (0, j, lay, t_iter))

    # register occupancy: one value per register per cycle
    occupied: set[tuple] = set()
    pending: dict[tuple, dict[str, int]] = {}
    fires = 0
    last_exit = -1

    def arrive(role: str, i: int, j: int, lay: int, t_iter: int, t: int) -> None:
        nonlocal fires
        key = (i, j, lay, t_iter)
        roles = pending.setdefault(key, {})
        if role in roles:
            raise ModelError(f"duplicate {role} delivery at PE{key}")
        roles[role] = t
        need = {"a", "b"} if lay == 0 else {"a", "b", "z"}
        if need <= roles.keys():
            times = {roles[r] for r in need}
            if len(times) != 1:
                raise ModelError(f"operands missed their rendezvous at PE{key}: {roles}")
            fires += 1
            push(t + l_dot, "done", (i, j, lay, t_iter))
            del pending[key]

    while events:
        t, _, kind, payload = heapq.heappop(events)
        if kind in ("a", "b"):
            i, j, lay, t_iter = payload
            reg = (kind, i, j, lay, t)
            if reg in occupied:
                raise ModelError(f"register collision on {reg}")
            occupied.add(reg)
            arrive(kind, i, j, lay, t_iter, t)
            if kind == "a" and j + 1 < dj:
                push(t + 1, "a", (i, j + 1, lay, t_iter))
            elif kind == "b" and i + 1 < di:
                push(t + 1, "b", (i + 1, j, lay, t_iter))
        else:  # done
            i, j, lay, t_iter = payload
            if lay + 1 < layers:
                arrive("z", i, j, lay + 1, t_iter, t)
            else:
                last_exit = max(last_exit, t + 1)

    if pending:
        raise ModelError(f"{len(pending)} PE firings never completed")
    if fires != di * dj * layers * iters:
        raise ModelError(f"expected {di * dj * layers * iters} firings, saw {fires}")

    l_tot = last_exit + 1
    l_body = l_tot - iters
    return TimingReport(
        l_body=l_body, l_tot=l_tot, fill=l_body - layers * l_dot, iterations=iters
    )


def wavefront_trace(shape: ArchShape) -> list[tuple[int, int, int]]:
    """(step, i, j) for every active PE over one block's wavefront sweep."""
    out = []
    for k in range(shape.d0_i + shape.d0_j + shape.d0_k - 2):
        for i in range(shape.d0_i):
            for j in range(shape.d0_j):
                if i + j <= k < i + j + shape.d0_k:
                    out.append((k, i, j))
    return out


def write_trace_csv(shape: ArchShape, path) -> None:
    """Debug dump of the activation schedule; refuses grids above 8^3."""
    if max(shape.d0_i, shape.d0_j, shape.d0_k) > 8:
        raise ModelError("trace dump is limited to grids of at most 8x8x8")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "i", "j"])
        writer.writerows(wavefront_trace(shape))
