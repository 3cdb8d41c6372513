"""gridmm: performance model, functional simulator, and design-space explorer
for 3D systolic-array matrix multiplication accelerators."""

from .arch import (
    ArchShape,
    BlockingPlan,
    ClockSpec,
    DEFAULT_LATENCY,
    LatencyProfile,
    MemorySpec,
    ModelError,
    ProblemShape,
    ddr_floats_per_cycle,
    dsp_count,
    io_throughput,
    make_blocking_plan,
    pe_count,
    validate_problem,
)
from .blocked import (
    GlobalMemModel,
    OnChipModel,
    SimStats,
    phase_counts,
    run_blocked,
    traffic_audit,
    write_stall_factor,
)
from .dse import (
    CompareRow,
    DesignPoint,
    SimulationResult,
    compare,
    design_point_from_config,
    design_point_to_config,
    enumerate_designs,
    predict,
    simulate,
)
from .matrix import (
    COL_MAJOR,
    ROW_MAJOR,
    BlockView,
    Matrix,
    block_view,
    load_binary,
    load_csv,
    oracle_matmul,
    relayout,
    save_binary,
    save_csv,
    transpose,
)
from .perf import (
    PerfEstimate,
    c_percent,
    classical_array_model,
    dot_unit_model,
    efficiency,
    flop_count,
    stall_rate,
    t_peak,
)
from .refdata import RefPoint, ReferenceRecord, load_reference_tables
from .systolic import (
    TimingReport,
    block_mac_fast,
    event_sim_timing,
    systolic_block_mac,
    timing_3d,
    timing_classical,
    wavefront_trace,
    write_trace_csv,
)

__version__ = "0.1.0"
