"""Design-point enumeration, prediction, simulation, and reference comparison.

fmax is always an assumption supplied by the caller (per design point or as
one default); nothing here pretends to predict what the hardware toolchain
will achieve.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .arch import (
    ArchShape,
    BlockingPlan,
    ClockSpec,
    LatencyProfile,
    MemorySpec,
    ModelError,
    ProblemShape,
    DEFAULT_LATENCY,
    dsp_count,
    io_throughput,
    make_blocking_plan,
    pe_count,
    validate_problem,
)
from .blocked import SimStats, run_blocked
from .matrix import COL_MAJOR, ROW_MAJOR, Matrix, oracle_matmul
from .perf import PerfEstimate, c_percent, compute_stall, t_peak
from .refdata import ReferenceRecord
from .systolic import timing_3d

__all__ = [
    "DesignPoint",
    "SimulationResult",
    "CompareRow",
    "enumerate_designs",
    "predict",
    "simulate",
    "compare",
    "design_point_to_config",
    "design_point_from_config",
]

# Reference e_D values are printed to two decimals, so deltas are judged at
# that resolution: half a quantum of slack on top of the stated tolerance.
REF_QUANTUM = 0.01


@dataclass(frozen=True)
class DesignPoint:
    """One candidate configuration: grid shape, clock, and blocking plan."""

    shape: ArchShape
    clock: ClockSpec
    plan: BlockingPlan | None
    feasible: bool
    violations: tuple[str, ...] = ()
    mem: MemorySpec = MemorySpec()


@dataclass(frozen=True)
class SimulationResult:
    stats: SimStats
    result_sha256: str
    matches_oracle: bool
    product: Matrix


@dataclass(frozen=True)
class CompareRow:
    design_id: str
    d2_i: int
    d2_j: int
    d2_k: int
    size_ratio: int
    predicted_c: float | None
    e_d_printed: float | None
    e_d_measured: float | None  # t_flops / t_peak, finer than the printed e_D
    delta: float | None
    tolerance: float | None
    status: str  # pass | fail | flagged | no-reference


def _point_for(
    shape: ArchShape,
    clock: ClockSpec,
    mem: MemorySpec,
    override_d1: tuple[int, int] | None = None,
) -> DesignPoint:
    try:
        plan = make_blocking_plan(shape, clock, mem, override_d1=override_d1)
    except ModelError as exc:
        return DesignPoint(shape, clock, None, False, (str(exc),), mem)
    return DesignPoint(shape, clock, plan, True, (), mem)


def enumerate_designs(
    budget: int,
    d0_i_range,
    d0_j_range,
    d0_k_range,
    d_p_range,
    clock: ClockSpec,
    mem: MemorySpec | None = None,
    max_dp: int | None = None,
) -> list[DesignPoint]:
    """All grid shapes within the DSP budget, in lexicographic order.

    Shapes whose lane count exceeds the budget, or whose dot size does not
    divide d0_k, are not design points at all and are skipped. Shapes whose
    blocking plan cannot be built are returned with feasible=False and the
    reasons attached. `max_dp` optionally drops dot units above a size the
    caller does not trust the hardware toolchain to place.
    """
    if budget < 1:
        raise ModelError(f"budget must be >= 1, got {budget}")
    ranges = [sorted(set(r)) for r in (d0_i_range, d0_j_range, d0_k_range, d_p_range)]
    if any(not r for r in ranges):
        raise ModelError("all size ranges must be non-empty")
    mem = MemorySpec() if mem is None else mem
    points = []
    for d0_i in ranges[0]:
        for d0_j in ranges[1]:
            for d0_k in ranges[2]:
                if d0_i * d0_j * d0_k > budget:
                    continue
                for d_p in ranges[3]:
                    if d_p > d0_k or d0_k % d_p:
                        continue
                    if max_dp is not None and d_p > max_dp:
                        continue
                    shape = ArchShape(d0_i, d0_j, d0_k, d_p)
                    points.append(_point_for(shape, clock, mem))
    return points


def predict(
    point: DesignPoint,
    problem: ProblemShape,
    lat: LatencyProfile = DEFAULT_LATENCY,
) -> PerfEstimate:
    """Analytic operating point of a feasible design on a problem size."""
    if not point.feasible or point.plan is None:
        raise ModelError(f"design point is not feasible: {point.violations}")
    violations = validate_problem(problem, point.plan, point.shape)
    if violations:
        raise ModelError("; ".join(violations))
    peak = t_peak(dsp_count(point.shape), point.clock)
    b_a, b_b = io_throughput(point.shape)
    timing = timing_3d(point.shape, problem.d2_k, lat)
    frac = c_percent(point.shape, point.plan, problem, point.clock)
    stall = compute_stall(point.plan, point.clock, point.mem)
    return PerfEstimate(
        n_dsp=dsp_count(point.shape),
        n_pe=pe_count(point.shape),
        t_peak=peak,
        b_a=b_a,
        b_b=b_b,
        l_body=timing.l_body,
        l_tot=timing.l_tot,
        c_percent=frac,
        t_pred=frac * peak,
        stall=stall,
    )


def _seeded_operands(problem: ProblemShape, seed: int, values: str) -> tuple[Matrix, Matrix]:
    rng = np.random.default_rng(seed)
    if values == "ints":
        a = rng.integers(-4, 5, size=(problem.d2_i, problem.d2_k)).astype(np.float32)
        b = rng.integers(-4, 5, size=(problem.d2_k, problem.d2_j)).astype(np.float32)
    elif values == "floats":
        a = rng.standard_normal((problem.d2_i, problem.d2_k)).astype(np.float32)
        b = rng.standard_normal((problem.d2_k, problem.d2_j)).astype(np.float32)
    else:
        raise ModelError(f"unknown value kind {values!r}")
    return Matrix.from_array(a, COL_MAJOR), Matrix.from_array(b, ROW_MAJOR)


def simulate(
    point: DesignPoint,
    problem: ProblemShape,
    fidelity: str = "blocked",
    seed: int = 0,
    values: str = "ints",
) -> SimulationResult:
    """Run the blocked multiplication on seeded operands and audit the result.

    fidelity "functional" drives every block product through the literal
    wavefront grid executor; "blocked" uses the order-identical fast kernel.
    Both return bitwise-equal numbers; functional is slower but exercises
    the grid dataflow end to end.
    """
    if not point.feasible or point.plan is None:
        raise ModelError(f"design point is not feasible: {point.violations}")
    if fidelity == "functional":
        kernel = "wavefront"
    elif fidelity == "blocked":
        kernel = "fast"
    else:
        raise ModelError(f"unknown fidelity {fidelity!r}")
    a, b = _seeded_operands(problem, seed, values)
    c, stats = run_blocked(a, b, point.shape, point.plan, problem, point.mem, point.clock, kernel)
    expected = oracle_matmul(a, b)
    arr = np.ascontiguousarray(c.to_array(), dtype="<f4")
    digest = hashlib.sha256(arr.tobytes()).hexdigest()
    return SimulationResult(stats, digest, c.same_values(expected), c)


def _tolerance_for(size_ratio: int) -> float:
    return 0.02 if size_ratio >= 4 else 0.05


def compare(
    refs: dict[str, ReferenceRecord],
    designs: list[str] | None = None,
    mem: MemorySpec | None = None,
) -> list[CompareRow]:
    """Predicted compute fraction against measured DSP efficiency, per size.

    The delta is taken against t_flops/t_peak (the measured efficiency at
    full precision); pass/fail allows half a quantum of the two-decimal
    reference tables on top of the band tolerance: 0.02 once the problem is
    at least 4 first-level blocks per side, 0.05 below that. Designs marked
    excluded are reported as "flagged" and never fail.
    """
    mem = MemorySpec() if mem is None else mem
    wanted = sorted(refs) if designs is None else list(designs)
    rows: list[CompareRow] = []
    for design_id in wanted:
        rec = refs.get(design_id)
        if rec is None or rec.fitter_failed or not rec.points:
            rows.append(
                CompareRow(design_id, 0, 0, 0, 0, None, None, None, None, None, "no-reference")
            )
            continue
        clock = ClockSpec(rec.fmax_mhz)
        override = (rec.d1_i, rec.d1_j) if rec.d1_i and rec.d1_j else None
        point = _point_for(rec.shape, clock, mem, override_d1=override)
        if not point.feasible:
            raise ModelError(
                f"reference design {design_id} has no valid plan: {point.violations}"
            )
        for p in rec.points:
            problem = ProblemShape(p.d2_i, p.d2_j, p.d2_k)
            pred = c_percent(rec.shape, point.plan, problem, clock)
            measured = p.t_flops_gflops / rec.t_peak_gflops
            delta = abs(pred - measured)
            ratio = min(p.d2_i // point.plan.d1_i, p.d2_j // point.plan.d1_j)
            tol = _tolerance_for(ratio)
            if rec.excluded:
                status = "flagged"
            else:
                status = "pass" if delta < tol + REF_QUANTUM / 2 + 1e-12 else "fail"
            rows.append(
                CompareRow(
                    design_id=design_id,
                    d2_i=p.d2_i,
                    d2_j=p.d2_j,
                    d2_k=p.d2_k,
                    size_ratio=ratio,
                    predicted_c=pred,
                    e_d_printed=p.e_d,
                    e_d_measured=measured,
                    delta=delta,
                    tolerance=tol,
                    status=status,
                )
            )
    return rows


def design_point_to_config(
    point: DesignPoint, problem: ProblemShape | None = None
) -> dict:
    """Serialize a design point (and optional problem) to the config schema."""
    cfg = {
        "arch": {
            "d0_i": point.shape.d0_i,
            "d0_j": point.shape.d0_j,
            "d0_k": point.shape.d0_k,
            "d_p": point.shape.d_p,
        },
        "clock": {"fmax_mhz": point.clock.fmax_mhz},
        "memory": {
            "bank_mb_s": point.mem.bank_mb_s,
            "efficiency": point.mem.efficiency,
            "lsu_pow2": point.mem.lsu_pow2,
        },
    }
    if point.plan is not None:
        cfg["blocking"] = {
            "d1_i": point.plan.d1_i,
            "d1_j": point.plan.d1_j,
            "b_ga": point.plan.b_ga,
            "b_gb": point.plan.b_gb,
        }
    if problem is not None:
        cfg["problem"] = {
            "d2_i": problem.d2_i,
            "d2_j": problem.d2_j,
            "d2_k": problem.d2_k,
        }
    return cfg


def design_point_from_config(cfg: dict) -> tuple[DesignPoint, ProblemShape | None]:
    """Rebuild a design point (and problem, if present) from a config dict."""
    try:
        arch = cfg["arch"]
        shape = ArchShape(arch["d0_i"], arch["d0_j"], arch["d0_k"], arch.get("d_p", 1))
        clock = ClockSpec(cfg["clock"]["fmax_mhz"])
    except KeyError as exc:
        raise ModelError(f"config is missing required key: {exc}") from None
    mem_cfg = cfg.get("memory", {})
    mem = MemorySpec(
        bank_mb_s=mem_cfg.get("bank_mb_s", MemorySpec().bank_mb_s),
        efficiency=mem_cfg.get("efficiency", 1.0),
        lsu_pow2=mem_cfg.get("lsu_pow2", True),
    )
    blocking = cfg.get("blocking") or {}
    override_d1 = None
    override_widths = None
    if "d1_i" in blocking or "d1_j" in blocking:
        if not ("d1_i" in blocking and "d1_j" in blocking):
            raise ModelError("blocking overrides must give both d1_i and d1_j")
        override_d1 = (blocking["d1_i"], blocking["d1_j"])
    if "b_ga" in blocking or "b_gb" in blocking:
        if not ("b_ga" in blocking and "b_gb" in blocking):
            raise ModelError("blocking overrides must give both b_ga and b_gb")
        override_widths = (blocking["b_ga"], blocking["b_gb"])
    try:
        plan = make_blocking_plan(
            shape, clock, mem, override_d1=override_d1, override_widths=override_widths
        )
        point = DesignPoint(shape, clock, plan, True, (), mem)
    except ModelError as exc:
        point = DesignPoint(shape, clock, None, False, (str(exc),), mem)
    problem = None
    if "problem" in cfg:
        pr = cfg["problem"]
        problem = ProblemShape(pr["d2_i"], pr["d2_j"], pr["d2_k"])
    return point, problem
