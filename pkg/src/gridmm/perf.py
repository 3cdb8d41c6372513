"""Throughput and efficiency equations, all pure functions.

Bandwidths cross module boundaries in bytes/cycle and are compared against
DDR rates in bytes/s, with 1 MB = 1e6 bytes (the DDR4-2400 figure of
19200 MB/s is 2400 MT/s x 8 B).
"""

from __future__ import annotations

from dataclasses import dataclass

from .arch import (
    ArchShape,
    BlockingPlan,
    BYTES_PER_FLOAT,
    ClockSpec,
    MemorySpec,
    ModelError,
    ProblemShape,
    ddr_floats_per_cycle,
    validate_problem,
)

__all__ = [
    "PerfEstimate",
    "t_peak",
    "stall_rate",
    "dot_unit_model",
    "c_percent",
    "flop_count",
    "efficiency",
    "classical_array_model",
]


@dataclass(frozen=True)
class PerfEstimate:
    """Predicted operating point of one design on one problem size."""

    n_dsp: int
    n_pe: int
    t_peak: float  # FLOPS
    b_a: int  # floats/cycle into the A face
    b_b: int  # floats/cycle into the B face
    l_body: int
    l_tot: int
    c_percent: float
    t_pred: float  # FLOPS
    stall: float

    def __post_init__(self) -> None:
        if not 0 <= self.c_percent <= 1:
            raise ModelError(f"c_percent={self.c_percent} outside [0, 1]")
        if not 0 <= self.stall < 1:
            raise ModelError(f"stall={self.stall} outside [0, 1)")


def t_peak(n_dsp: int, clock: ClockSpec) -> float:
    """Peak FLOPS of n_dsp fused multiply-add lanes: 2 FLOP per lane-cycle."""
    if n_dsp < 1:
        raise ModelError(f"n_dsp must be >= 1, got {n_dsp}")
    return 2.0 * n_dsp * clock.hz


def stall_rate(request_bytes_per_cycle: float, clock: ClockSpec, mem: MemorySpec) -> float:
    """Fraction of requests one memory controller cannot fulfil.

    Zero while the requested rate fits within the efficiency-adjusted bank
    throughput; beyond that, effective throughput scales by (1 - stall).
    """
    if request_bytes_per_cycle <= 0:
        raise ModelError("request must be positive")
    demand = request_bytes_per_cycle * clock.hz
    supply = mem.efficiency * mem.bytes_per_s
    if demand <= supply:
        return 0.0
    return 1.0 - supply / demand


def dot_unit_model(d_p: int) -> tuple[int, int]:
    """(FLOP/cycle, input floats/cycle) of a size-d_p dot unit in pipeline."""
    if d_p < 1:
        raise ModelError(f"d_p must be >= 1, got {d_p}")
    return 2 * d_p, 2 * d_p + 1


def c_percent(
    shape: ArchShape,
    plan: BlockingPlan,
    problem: ProblemShape,
    clock: ClockSpec,
) -> float:
    """Fraction of pipeline iterations in which the dot units compute.

    Per result block the schedule spends one read round, d2_k/d0_k compute
    rounds, and a write phase worth d0_i*d0_j/tier of a round, giving
    n / (1 + n + d0_i*d0_j/tier) with n = d2_k/d0_k. The estimate assumes
    a blocking plan with matched reuse ratios, which `plan` is checked for.
    """
    violations = validate_problem(problem, plan, shape)
    if violations:
        raise ModelError("; ".join(violations))
    n = problem.d2_k / shape.d0_k
    w = shape.d0_i * shape.d0_j / ddr_floats_per_cycle(clock)
    return n / (1.0 + n + w)


def flop_count(problem: ProblemShape) -> int:
    """Single-precision FLOP of the full product: multiplies plus adds."""
    return problem.d2_i * problem.d2_j * (2 * problem.d2_k - 1)


def efficiency(t_measured: float, t_peak_flops: float) -> float:
    """Achieved fraction of peak floating-point throughput."""
    if t_peak_flops <= 0:
        raise ModelError("t_peak must be positive")
    return t_measured / t_peak_flops


def classical_array_model(d0_i: int, d0_j: int) -> tuple[int, int, int]:
    """(FLOP/cycle, A floats/cycle, B floats/cycle) of the 2-D MAC grid."""
    if min(d0_i, d0_j) < 1:
        raise ModelError("grid sizes must be >= 1")
    return 2 * d0_i * d0_j, d0_i, d0_j


def compute_stall(plan: BlockingPlan, clock: ClockSpec, mem: MemorySpec) -> float:
    """Worst per-stream stall during the overlapped read/compute rounds."""
    return max(
        stall_rate(plan.b_ga * BYTES_PER_FLOAT, clock, mem),
        stall_rate(plan.b_gb * BYTES_PER_FLOAT, clock, mem),
    )
