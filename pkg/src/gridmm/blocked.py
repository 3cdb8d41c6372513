"""Two-level blocked off-chip multiplication under the four-phase schedule.

For each first-level output block the runner executes: (1) read the first
operand panels while zero-initialising the result FIFOs, (2) steady-state
rounds that overlap reading panel k+1 with computing on panel k, (3) a
compute-only tail on the last panel, (4) a write phase that drains the
FIFOs to memory, stalling when the store width exceeds the LSU tier.
Fidelity is iteration-level: pipeline fill between phases is ignored here
(the cycle-level view lives in the systolic module).
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

from .arch import (
    ArchShape,
    BlockingPlan,
    ClockSpec,
    MemorySpec,
    ModelError,
    ProblemShape,
    ddr_floats_per_cycle,
    validate_problem,
)
from .matrix import COL_MAJOR, ROW_MAJOR, Matrix
from .systolic import block_mac_fast, systolic_block_mac

__all__ = [
    "SimStats",
    "GlobalMemModel",
    "OnChipModel",
    "write_stall_factor",
    "phase_counts",
    "run_blocked",
    "traffic_audit",
]


@dataclass
class SimStats:
    """Per-phase iteration counts, element traffic, and derived ratios.

    it_write carries the write-stall multiplier, so it may be fractional
    when the store width does not divide the LSU tier evenly.
    """

    it_read_init: int = 0
    it_steady: int = 0
    it_tail: int = 0
    it_write: float = 0
    it_comp: int = 0
    it_tot: float = 0
    elements_read_a: int = 0
    elements_read_b: int = 0
    elements_written_c: int = 0
    measured_c: float = 0.0
    cycles_total: float = 0
    peak_onchip_a: int = 0
    peak_onchip_b: int = 0
    peak_fifo: int = 0

    def finalize(self) -> "SimStats":
        self.it_tot = self.it_read_init + self.it_steady + self.it_tail + self.it_write
        for name in ("it_write", "it_tot"):
            v = getattr(self, name)
            if isinstance(v, float) and v.is_integer():
                setattr(self, name, int(v))
        self.it_comp = self.it_steady + self.it_tail
        self.measured_c = self.it_comp / self.it_tot if self.it_tot else 0.0
        self.cycles_total = self.it_tot
        return self

    def to_kv_text(self) -> str:
        return "\n".join(f"{f.name}={getattr(self, f.name)}" for f in fields(self))

    @staticmethod
    def csv_header() -> str:
        return ",".join(f.name for f in fields(SimStats))

    def to_csv_row(self) -> str:
        vals = []
        for f in fields(self):
            v = getattr(self, f.name)
            vals.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        return ",".join(vals)


class GlobalMemModel:
    """Element counters and stall accounting for the three memory streams."""

    def __init__(self, mem: MemorySpec, clock: ClockSpec):
        self.mem = mem
        self.clock = clock
        self.tier = ddr_floats_per_cycle(clock)
        self.elements_read_a = 0
        self.elements_read_b = 0
        self.elements_written_c = 0
        self.write_stall_iterations = 0.0

    def read_a(self, n: int) -> None:
        self.elements_read_a += n

    def read_b(self, n: int) -> None:
        self.elements_read_b += n

    def write_c(self, n: int, store_width: int) -> float:
        """Write n elements at store_width floats/cycle; returns the
        iteration count inflated by the stall factor."""
        if n % store_width:
            raise ModelError(f"write of {n} elements not aligned to width {store_width}")
        nominal = n // store_width
        factor = max(1.0, store_width / self.tier)
        self.elements_written_c += n
        self.write_stall_iterations += nominal * (factor - 1.0)
        return nominal * factor


class OnChipModel:
    """Occupancy model of the mapped operand partitions and result FIFOs.

    Mapped A holds at most two k-panels (2 * d1_i * d0_k elements across
    d0_i*d0_k partitions of depth 2*r_b); mapped B is symmetric. The FIFO
    system holds exactly one first-level result block (d0_i*d0_j queues of
    depth r_a*r_b). Exceeding a capacity raises: the schedule is supposed
    to make that impossible.
    """

    def __init__(self, shape: ArchShape, plan: BlockingPlan):
        self.a_partitions = shape.d0_i * shape.d0_k
        self.b_partitions = shape.d0_j * shape.d0_k
        self.a_depth = 2 * plan.r_b
        self.b_depth = 2 * plan.r_a
        self.fifo_count = shape.d0_i * shape.d0_j
        self.fifo_depth = plan.r_a * plan.r_b
        self.a_capacity = self.a_partitions * self.a_depth
        self.b_capacity = self.b_partitions * self.b_depth
        self.fifo_capacity = self.fifo_count * self.fifo_depth
        self.occ_a = 0
        self.occ_b = 0
        self.occ_fifo = 0
        self.peak_a = 0
        self.peak_b = 0
        self.peak_fifo = 0

    def _bump(self, attr: str, peak: str, cap: int, n: int) -> None:
        val = getattr(self, attr) + n
        if val > cap:
            raise ModelError(f"on-chip {attr} exceeded capacity {cap}")
        if val < 0:
            raise ModelError(f"on-chip {attr} went negative")
        setattr(self, attr, val)
        setattr(self, peak, max(getattr(self, peak), val))

    def load_a(self, n: int) -> None:
        self._bump("occ_a", "peak_a", self.a_capacity, n)

    def load_b(self, n: int) -> None:
        self._bump("occ_b", "peak_b", self.b_capacity, n)

    def retire_a(self, n: int) -> None:
        self._bump("occ_a", "peak_a", self.a_capacity, -n)

    def retire_b(self, n: int) -> None:
        self._bump("occ_b", "peak_b", self.b_capacity, -n)

    def fifo_fill(self, n: int) -> None:
        self._bump("occ_fifo", "peak_fifo", self.fifo_capacity, n)

    def fifo_drain(self, n: int) -> None:
        self._bump("occ_fifo", "peak_fifo", self.fifo_capacity, -n)


def write_stall_factor(shape: ArchShape, clock: ClockSpec) -> float:
    """Slowdown of the write phase when d0_j floats/cycle exceed the tier."""
    return max(1.0, shape.d0_j / ddr_floats_per_cycle(clock))


def phase_counts(
    shape: ArchShape, plan: BlockingPlan, problem: ProblemShape, clock: ClockSpec
) -> SimStats:
    """Closed-form phase/traffic counters for a run, without executing it.

    run_blocked counts the same quantities live; the tests hold the two
    routes to exact agreement.
    """
    violations = validate_problem(problem, plan, shape)
    if violations:
        raise ModelError("; ".join(violations))
    blocks = (problem.d2_i // plan.d1_i) * (problem.d2_j // plan.d1_j)
    rounds = problem.d2_k // shape.d0_k
    per_round = plan.r_a * plan.r_b
    tier = ddr_floats_per_cycle(clock)
    stats = SimStats(
        it_read_init=blocks * per_round,
        it_steady=blocks * (rounds - 1) * per_round,
        it_tail=blocks * per_round,
        it_write=blocks * plan.d1_i * plan.d1_j / min(shape.d0_j, tier),
        elements_read_a=blocks * plan.d1_i * problem.d2_k,
        elements_read_b=blocks * plan.d1_j * problem.d2_k,
        elements_written_c=blocks * plan.d1_i * plan.d1_j,
        peak_onchip_a=2 * plan.d1_i * shape.d0_k if rounds > 1 else plan.d1_i * shape.d0_k,
        peak_onchip_b=2 * plan.d1_j * shape.d0_k if rounds > 1 else plan.d1_j * shape.d0_k,
        peak_fifo=plan.d1_i * plan.d1_j,
    )
    return stats.finalize()


def run_blocked(
    a: Matrix,
    b: Matrix,
    shape: ArchShape,
    plan: BlockingPlan,
    problem: ProblemShape,
    mem: MemorySpec,
    clock: ClockSpec,
    kernel: str = "fast",
) -> tuple[Matrix, SimStats]:
    """Execute the blocked multiplication, returning the product and stats.

    A must be stored column-major and B row-major (the streaming orders of
    the read phases). The result is bitwise identical to oracle_matmul:
    panels are accumulated with k outermost ascending and each block
    product adds one product per element per k step.

    kernel selects the per-block executor: "fast" (order-identical rank-1
    updates) or "wavefront" (the literal grid sweep); both produce
    bitwise-equal results.
    """
    if a.layout != COL_MAJOR:
        raise ModelError("A must be stored column-major (it is streamed by columns)")
    if b.layout != ROW_MAJOR:
        raise ModelError("B must be stored row-major (it is streamed by rows)")
    if (a.rows, a.cols) != (problem.d2_i, problem.d2_k):
        raise ModelError(f"A is {a.rows}x{a.cols}, problem says {problem.d2_i}x{problem.d2_k}")
    if (b.rows, b.cols) != (problem.d2_k, problem.d2_j):
        raise ModelError(f"B is {b.rows}x{b.cols}, problem says {problem.d2_k}x{problem.d2_j}")
    violations = validate_problem(problem, plan, shape)
    if violations:
        raise ModelError("; ".join(violations))
    if kernel == "fast":
        mac = block_mac_fast
    elif kernel == "wavefront":
        mac = systolic_block_mac
    else:
        raise ModelError(f"unknown kernel {kernel!r}")

    d0_i, d0_j, d0_k = shape.d0_i, shape.d0_j, shape.d0_k
    d1_i, d1_j = plan.d1_i, plan.d1_j
    r_a, r_b = plan.r_a, plan.r_b
    a2 = a.to_array()
    b2 = b.to_array()
    out = np.zeros((problem.d2_i, problem.d2_j), dtype=np.float32)

    rounds = problem.d2_k // d0_k
    panel_a = d1_i * d0_k
    panel_b = d1_j * d0_k
    gm = GlobalMemModel(mem, clock)
    onchip = OnChipModel(shape, plan)
    stats = SimStats()

    def stage_panel(block_i: int, block_j: int, k: int) -> tuple[list, list]:
        """Copy one k-panel of second-level A and B blocks on chip."""
        i0 = block_i * d1_i
        j0 = block_j * d1_j
        k0 = k * d0_k
        a_blocks = [
            a2[i0 + bi * d0_i : i0 + (bi + 1) * d0_i, k0 : k0 + d0_k].copy()
            for bi in range(r_b)
        ]
        b_blocks = [
            b2[k0 : k0 + d0_k, j0 + bj * d0_j : j0 + (bj + 1) * d0_j].copy()
            for bj in range(r_a)
        ]
        return a_blocks, b_blocks

    def read_round(counter: str) -> None:
        """r_a*r_b fused-loop iterations streaming one panel of A and B."""
        rem_a, rem_b = panel_a, panel_b
        for _ in range(r_a * r_b):
            na = min(plan.b_ga, rem_a)
            nb = min(plan.b_gb, rem_b)
            gm.read_a(na)
            gm.read_b(nb)
            onchip.load_a(na)
            onchip.load_b(nb)
            rem_a -= na
            rem_b -= nb
            setattr(stats, counter, getattr(stats, counter) + 1)
        if rem_a or rem_b:
            raise ModelError("plan under-read a panel; reuse ratios are inconsistent")

    for block_i in range(problem.d2_i // d1_i):
        for block_j in range(problem.d2_j // d1_j):
            fifo = [
                [np.zeros((d0_i, d0_j), dtype=np.float32) for _ in range(r_a)]
                for _ in range(r_b)
            ]
            onchip.fifo_fill(d1_i * d1_j)

            # phase 1: stream the first panels, result FIFOs start at zero
            read_round("it_read_init")
            bufs = {0: stage_panel(block_i, block_j, 0)}

            # phase 2: steady rounds, read k+1 while computing on k
            for k in range(rounds - 1):
                cur, nxt = k % 2, (k + 1) % 2
                rem_a, rem_b = panel_a, panel_b
                a_blocks, b_blocks = bufs[cur]
                for bi in range(r_b):
                    for bj in range(r_a):
                        na = min(plan.b_ga, rem_a)
                        nb = min(plan.b_gb, rem_b)
                        gm.read_a(na)
                        gm.read_b(nb)
                        onchip.load_a(na)
                        onchip.load_b(nb)
                        rem_a -= na
                        rem_b -= nb
                        fifo[bi][bj] = mac(fifo[bi][bj], a_blocks[bi], b_blocks[bj])
                        stats.it_steady += 1
                bufs[nxt] = stage_panel(block_i, block_j, k + 1)
                del bufs[cur]
                onchip.retire_a(panel_a)
                onchip.retire_b(panel_b)

            # phase 3: compute-only tail on the last panel
            a_blocks, b_blocks = bufs[(rounds - 1) % 2]
            for bi in range(r_b):
                for bj in range(r_a):
                    fifo[bi][bj] = mac(fifo[bi][bj], a_blocks[bi], b_blocks[bj])
                    stats.it_tail += 1
            onchip.retire_a(panel_a)
            onchip.retire_b(panel_b)

            # phase 4: drain the FIFOs to memory, d0_j floats per iteration
            i0 = block_i * d1_i
            j0 = block_j * d1_j
            for bi in range(r_b):
                for bj in range(r_a):
                    out[
                        i0 + bi * d0_i : i0 + (bi + 1) * d0_i,
                        j0 + bj * d0_j : j0 + (bj + 1) * d0_j,
                    ] = fifo[bi][bj]
            stats.it_write += gm.write_c(d1_i * d1_j, d0_j)
            onchip.fifo_drain(d1_i * d1_j)

    stats.elements_read_a = gm.elements_read_a
    stats.elements_read_b = gm.elements_read_b
    stats.elements_written_c = gm.elements_written_c
    stats.peak_onchip_a = onchip.peak_a
    stats.peak_onchip_b = onchip.peak_b
    stats.peak_fifo = onchip.peak_fifo
    return Matrix.from_array(out, ROW_MAJOR), stats.finalize()


def traffic_audit(stats: SimStats, problem: ProblemShape, plan: BlockingPlan) -> list[str]:
    """Check the element counters against the reuse identities; empty = ok.

    Every A element is read once per column of first-level result blocks,
    every B element once per row of them, and every C element written once.
    """
    expected = {
        "elements_read_a": problem.d2_i * problem.d2_k * (problem.d2_j // plan.d1_j),
        "elements_read_b": problem.d2_k * problem.d2_j * (problem.d2_i // plan.d1_i),
        "elements_written_c": problem.d2_i * problem.d2_j,
    }
    violations = []
    for name, want in expected.items():
        got = getattr(stats, name)
        if got != want:
            violations.append(f"{name}={got}, expected {want}")
    return violations
