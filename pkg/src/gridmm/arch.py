"""Architecture configuration and first-level blocking derivation.

Units used throughout the package: grid dimensions in PEs or elements,
clock frequency in MHz, DDR bandwidth in MB/s (1 MB = 1e6 bytes), and
streaming throughput in single-precision floats per clock cycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "ModelError",
    "ArchShape",
    "LatencyProfile",
    "ClockSpec",
    "MemorySpec",
    "BlockingPlan",
    "ProblemShape",
    "DEFAULT_LATENCY",
    "DDR_BANK_MB_S",
    "BYTES_PER_FLOAT",
    "dsp_count",
    "pe_count",
    "io_throughput",
    "ddr_floats_per_cycle",
    "make_blocking_plan",
    "validate_problem",
]

DDR_BANK_MB_S = 19200.0
BYTES_PER_FLOAT = 4


class ModelError(ValueError):
    """A configuration or input violates one of the model's invariants."""


def _require_positive_int(value, name: str) -> None:
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ModelError(f"{name} must be a positive integer, got {value!r}")


@dataclass(frozen=True)
class ArchShape:
    """Dimensions of the PE grid and of the dot unit inside each PE.

    The grid is d0_i x d0_j PEs wide and d0_k multiplier lanes deep; the
    lanes are grouped into dot-product units of size d_p, so the grid has
    d0_k / d_p stacked layers.
    """

    d0_i: int
    d0_j: int
    d0_k: int
    d_p: int = 1

    def __post_init__(self) -> None:
        for name in ("d0_i", "d0_j", "d0_k", "d_p"):
            _require_positive_int(getattr(self, name), name)
        if self.d0_k % self.d_p:
            raise ModelError(
                f"d0_k={self.d0_k} is not divisible by dot-unit size d_p={self.d_p}"
            )

    @property
    def layers(self) -> int:
        return self.d0_k // self.d_p


@dataclass(frozen=True)
class LatencyProfile:
    """Pipeline latencies of the arithmetic units, in clock cycles.

    The default dot-unit latencies are placeholders, not vendor-measured
    numbers; swap in values for your target device when they matter.
    Sizes absent from the table are interpolated (and extrapolated)
    linearly in log2 of the unit size, rounded to whole cycles.
    """

    l_mac: int = 6
    l_dot: dict[int, int] = field(default_factory=lambda: {1: 6, 2: 8, 4: 11, 8: 15})
    register_hop: int = 1

    def __post_init__(self) -> None:
        if not isinstance(self.l_mac, int) or self.l_mac < 0:
            raise ModelError(f"l_mac must be a non-negative integer, got {self.l_mac!r}")
        if self.register_hop != 1:
            raise ModelError("register_hop is fixed at 1 cycle per inter-PE hop")
        if not self.l_dot:
            raise ModelError("l_dot table must not be empty")
        last = 0
        for size in sorted(self.l_dot):
            lat = self.l_dot[size]
            _require_positive_int(size, "dot-unit size")
            _require_positive_int(lat, f"l_dot[{size}]")
            if lat < last:
                raise ModelError("l_dot must be non-decreasing in the unit size")
            last = lat
        object.__setattr__(self, "l_dot", dict(sorted(self.l_dot.items())))

    def dot_latency(self, d_p: int) -> int:
        """Latency of a size-d_p dot unit, from the table or log2-linear fit."""
        _require_positive_int(d_p, "d_p")
        if d_p in self.l_dot:
            return self.l_dot[d_p]
        xs = [math.log2(s) for s in self.l_dot]
        ys = list(self.l_dot.values())
        x = math.log2(d_p)
        if len(xs) == 1:
            return max(1, ys[0])
        if x <= xs[0]:
            i = 0
        elif x >= xs[-1]:
            i = len(xs) - 2
        else:
            i = max(k for k in range(len(xs) - 1) if xs[k] <= x)
        slope = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
        return max(1, round(ys[i] + slope * (x - xs[i])))


DEFAULT_LATENCY = LatencyProfile()


@dataclass(frozen=True)
class ClockSpec:
    """Design clock frequency in MHz.

    The frequency is always an input: it comes from the hardware toolchain,
    never from this model. Only the range covered by the LSU width tiers
    is accepted.
    """

    fmax_mhz: float

    def __post_init__(self) -> None:
        if not 150 < self.fmax_mhz <= 600:
            raise ModelError(
                f"fmax={self.fmax_mhz} MHz is outside the supported (150, 600] range"
            )

    @property
    def hz(self) -> float:
        return self.fmax_mhz * 1e6


@dataclass(frozen=True)
class MemorySpec:
    """One DDR bank: peak throughput, controller efficiency, LSU width rule."""

    bank_mb_s: float = DDR_BANK_MB_S
    efficiency: float = 1.0
    lsu_pow2: bool = True

    def __post_init__(self) -> None:
        if self.bank_mb_s <= 0:
            raise ModelError(f"bank_mb_s must be positive, got {self.bank_mb_s}")
        if not 0 < self.efficiency <= 1:
            raise ModelError(f"efficiency must be in (0, 1], got {self.efficiency}")

    @property
    def bytes_per_s(self) -> float:
        return self.bank_mb_s * 1e6


@dataclass(frozen=True)
class BlockingPlan:
    """First-level block sizes plus the read widths and reuse that feed them.

    d1_i = r_b * d0_i and d1_j = r_a * d0_j; every staged element of A is
    reused r_a times and of B r_b times, which is what lets read widths of
    b_ga/b_gb floats per cycle keep the grid fed.
    """

    d1_i: int
    d1_j: int
    b_ga: int
    b_gb: int
    r_a: int
    r_b: int
    notes: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProblemShape:
    """Off-chip matrix dimensions: A is d2_i x d2_k, B is d2_k x d2_j."""

    d2_i: int
    d2_j: int
    d2_k: int

    def __post_init__(self) -> None:
        for name in ("d2_i", "d2_j", "d2_k"):
            _require_positive_int(getattr(self, name), name)


def dsp_count(shape: ArchShape) -> int:
    """Multiply-accumulate lanes (hard DSP blocks) in the grid."""
    return shape.d0_i * shape.d0_j * shape.d0_k


def pe_count(shape: ArchShape) -> int:
    """Dot-product units in the grid; pe_count * d_p == dsp_count."""
    return shape.d0_i * shape.d0_j * shape.layers


def io_throughput(shape: ArchShape) -> tuple[int, int]:
    """Floats per cycle the grid ingests on its two input faces (A, B)."""
    return shape.d0_i * shape.d0_k, shape.d0_k * shape.d0_j


def ddr_floats_per_cycle(clock: ClockSpec) -> int:
    """Widest stall-free LSU request against one stock DDR bank, in floats.

    Two plateaus: 64 bytes/cycle (16 floats) up to 300 MHz inclusive,
    32 bytes/cycle (8 floats) above, assuming the 19200 MB/s bank and a
    controller efficiency near 1 for aligned bursts.
    """
    f = clock.fmax_mhz
    if not 150 < f <= 600:
        raise ModelError(f"fmax={f} MHz has no LSU width tier")
    return 16 if f <= 300 else 8


def make_blocking_plan(
    shape: ArchShape,
    clock: ClockSpec,
    mem: MemorySpec | None = None,
    override_d1: tuple[int, int] | None = None,
    override_widths: tuple[int, int] | None = None,
) -> BlockingPlan:
    """Derive the first-level blocking for a grid at a given clock.

    Default mode reads at the full tier width and picks the minimal reuse
    ratios that keep the grid fed (ceiling division). Override mode accepts
    caller-chosen block sizes (multiples of the grid sizes) and recomputes
    the implied read widths, rejecting plans that would need more than the
    tier allows. Non-power-of-two widths are permitted but noted, since the
    memory toolchain only emits power-of-two LSUs.
    """
    mem = MemorySpec() if mem is None else mem
    b_a, b_b = io_throughput(shape)
    tier = ddr_floats_per_cycle(clock)

    if override_d1 is None:
        b_ga = b_gb = tier
        r_a = -(-b_a // tier)
        r_b = -(-b_b // tier)
        d1_i = r_b * shape.d0_i
        d1_j = r_a * shape.d0_j
    else:
        d1_i, d1_j = override_d1
        _require_positive_int(d1_i, "d1_i")
        _require_positive_int(d1_j, "d1_j")
        if d1_i % shape.d0_i:
            raise ModelError(f"d1_i={d1_i} is not a multiple of d0_i={shape.d0_i}")
        if d1_j % shape.d0_j:
            raise ModelError(f"d1_j={d1_j} is not a multiple of d0_j={shape.d0_j}")
        r_b = d1_i // shape.d0_i
        r_a = d1_j // shape.d0_j
        b_ga = -(-b_a // r_a)
        b_gb = -(-b_b // r_b)

    if override_widths is not None:
        wa, wb = override_widths
        _require_positive_int(wa, "b_ga")
        _require_positive_int(wb, "b_gb")
        if wa * r_a < b_a or wb * r_b < b_b:
            raise ModelError(
                "override read widths cannot keep the grid fed at the given reuse"
            )
        b_ga, b_gb = wa, wb

    if b_ga > tier or b_gb > tier:
        raise ModelError(
            f"read widths ({b_ga}, {b_gb}) floats/cycle exceed the "
            f"{tier}-float LSU tier at {clock.fmax_mhz} MHz"
        )

    notes: list[str] = []
    if mem.lsu_pow2:
        for label, width in (("A", b_ga), ("B", b_gb)):
            nbytes = width * BYTES_PER_FLOAT
            if nbytes & (nbytes - 1):
                notes.append(
                    f"{label} read width {width} floats ({nbytes} B) is not a "
                    "power-of-two LSU size; the toolchain would round it up"
                )

    return BlockingPlan(d1_i, d1_j, b_ga, b_gb, r_a, r_b, tuple(notes))


def validate_problem(
    problem: ProblemShape, plan: BlockingPlan, shape: ArchShape
) -> list[str]:
    """Collect every violated divisibility constraint; empty means valid."""
    violations = []
    if problem.d2_i % plan.d1_i:
        violations.append(f"d2_i={problem.d2_i} is not a multiple of d1_i={plan.d1_i}")
    if problem.d2_j % plan.d1_j:
        violations.append(f"d2_j={problem.d2_j} is not a multiple of d1_j={plan.d1_j}")
    if problem.d2_k % shape.d0_k:
        violations.append(f"d2_k={problem.d2_k} is not a multiple of d0_k={shape.d0_k}")
    if plan.d1_i % shape.d0_i:
        violations.append(f"d1_i={plan.d1_i} is not a multiple of d0_i={shape.d0_i}")
    if plan.d1_j % shape.d0_j:
        violations.append(f"d1_j={plan.d1_j} is not a multiple of d0_j={shape.d0_j}")
    return violations
