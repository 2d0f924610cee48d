"""State snapshots, trajectory CSVs and deterministic report files.

Snapshot container: a single ``.npz`` with header string "GPWB1"; field
names and layouts are documented in docs/snapshot_format.md.  Reports are
key=value text with sorted keys and LF endings so byte identity across
runs and worker counts is meaningful.
"""
from __future__ import annotations

import json

import numpy as np

from .groups import ProductGroupSpec, SubgroupSetting
from .lattice import FactorState, LatticeBundle, LatticePairState, TorusLattice
from .reps import RepSpec, Slot

SNAPSHOT_HEADER = "GPWB1"
CSV_HEADER = "iteration,l2_residual,linf_residual,sup_log_metric"


def save_state(path, state: LatticePairState):
    """Write a GPWB1 snapshot: lattice size, per-factor mode/rank/degree
    data, link arrays (direction-major, row-major site order), the section
    array and the metric exponent arrays."""
    payload = {
        "header": np.array(SNAPSHOT_HEADER),
        "lattice_n": np.array(state.lattice.n),
        "kind": np.array(state.kind),
        "num_factors": np.array(len(state.factors)),
        "central_scalars": np.array(state.setting.central_scalars),
        "modes": np.array([f.mode for f in state.factors]),
        "slots": np.array(
            [(sl.dim, sl.action, sl.factor) for sl in state.rep.slots], dtype=object
        ),
        "section": state.section,
        "construction_residual": np.array(state.construction_residual),
        "params": np.array(json.dumps(state.params, sort_keys=True, default=str)),
    }
    for i, f in enumerate(state.factors):
        payload[f"links_{i}"] = f.bundle.links
        payload[f"degrees_{i}"] = np.array(f.bundle.summand_degrees)
        if i in state.u:
            payload[f"metric_exp_{i}"] = state.u[i]
    np.savez(path, **payload)


def load_state(path) -> LatticePairState:
    with np.load(path, allow_pickle=True) as z:
        header = str(z["header"])
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"not a {SNAPSHOT_HEADER} snapshot (header {header!r})")
        n = int(z["lattice_n"])
        lat = TorusLattice(n)
        nf = int(z["num_factors"])
        modes = [str(m) for m in z["modes"]]
        factors = []
        dims = []
        for i in range(nf):
            links = z[f"links_{i}"]
            degs = tuple(int(d) for d in z[f"degrees_{i}"])
            rank = links.shape[-1]
            dims.append(rank)
            factors.append(FactorState(LatticeBundle(lat, rank, links, degs), modes[i]))
        spec = ProductGroupSpec(tuple(dims))
        slots = tuple(Slot(int(d), str(a), int(f)) for d, a, f in z["slots"])
        rep = RepSpec(spec, slots)
        setting = SubgroupSetting(spec, tuple(modes),
                                  tuple(float(c) for c in z["central_scalars"]))
        state = LatticePairState(lat, spec, rep, setting, factors, z["section"],
                                 float(z["construction_residual"]), str(z["kind"]),
                                 json.loads(str(z["params"])))
        for i in range(nf):
            key = f"metric_exp_{i}"
            if key in z:
                state.u[i] = z[key]
    return state


def format_float(x) -> str:
    """Full round-trip precision decimal formatting."""
    return repr(float(x))


def emit_csv(trajectory, path):
    """One row per accepted step; header fixed; LF endings; repr floats."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for it, l2, linf, slm in trajectory:
            f.write(f"{int(it)},{format_float(l2)},{format_float(linf)},{format_float(slm)}\n")


def parse_csv(path):
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header!r}")
        rows = []
        for line in f:
            it, a, b, c = line.strip().split(",")
            rows.append((int(it), float(a), float(b), float(c)))
    return rows


def _render(value, prefix, lines):
    if isinstance(value, dict):
        for k in sorted(value):
            _render(value[k], f"{prefix}.{k}" if prefix else str(k), lines)
    elif isinstance(value, (list, tuple)):
        for i, v in enumerate(value):
            _render(v, f"{prefix}[{i}]", lines)
    elif isinstance(value, float):
        lines.append(f"{prefix} = {format_float(value)}")
    elif isinstance(value, (bool, int, str)) or value is None:
        lines.append(f"{prefix} = {value}")
    else:
        lines.append(f"{prefix} = {value!r}")


def write_report(path, payload: dict):
    """Deterministic key=value report; no timing data belongs in here."""
    lines = []
    _render(payload, "", lines)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("\n".join(lines) + "\n")
