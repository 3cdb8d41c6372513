"""Bundled reference design points: synthesized sizes, fmax, and measured
throughput for designs A-N on the target accelerator card."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .arch import ArchShape, ModelError

__all__ = ["RefPoint", "ReferenceRecord", "load_reference_tables"]


@dataclass(frozen=True)
class RefPoint:
    """Measured throughput of one design at one problem size."""

    d2_i: int
    d2_j: int
    d2_k: int
    t_flops_gflops: float
    e_d: float


@dataclass(frozen=True)
class ReferenceRecord:
    """One design row: grid shape, fit outcome, and measured points."""

    design_id: str
    shape: ArchShape
    n_dsp: int
    n_pe: int
    fitter_failed: bool
    fmax_mhz: float | None
    t_peak_gflops: float | None
    d1_i: int | None
    d1_j: int | None
    excluded: bool
    exclusion_reason: str
    points: tuple[RefPoint, ...]


def _record_from_dict(d: dict) -> ReferenceRecord:
    shape = ArchShape(d["d0_i"], d["d0_j"], d["d0_k"], d["d_p"])
    points = tuple(
        RefPoint(p["d2_i"], p["d2_j"], p["d2_k"], p["t_flops_gflops"], p["e_d"])
        for p in d.get("points", [])
    )
    return ReferenceRecord(
        design_id=d["id"],
        shape=shape,
        n_dsp=d["n_dsp"],
        n_pe=d["n_pe"],
        fitter_failed=d.get("fitter_failed", False),
        fmax_mhz=d.get("fmax_mhz"),
        t_peak_gflops=d.get("t_peak_gflops"),
        d1_i=d.get("d1_i"),
        d1_j=d.get("d1_j"),
        excluded=d.get("excluded", False),
        exclusion_reason=d.get("exclusion_reason", ""),
        points=points,
    )


def load_reference_tables(path=None) -> dict[str, ReferenceRecord]:
    """Load reference records by design id, from `path` or the bundled file."""
    if path is None:
        raw = resources.files("gridmm.data").joinpath("reference_tables.json").read_text()
    else:
        with open(path) as fh:
            raw = fh.read()
    doc = json.loads(raw)
    if "designs" not in doc:
        raise ModelError("reference file has no 'designs' section")
    records = {}
    for entry in doc["designs"]:
        rec = _record_from_dict(entry)
        records[rec.design_id] = rec
    return records
