"""Field snapshots, CSV export/import and cross-method metrics."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import GridMismatchError
from .wavepacket import SpinorField, charge_density

SEMI_ANALYTIC = "semi-analytic"
FINITE_DIFFERENCE = "finite-difference"
CSV_HEADER = "x,re_phi,im_phi,re_chi,im_chi,rho"
_FMT = "%.16e"


@dataclass(frozen=True)
class Snapshot:
    field: SpinorField
    provenance: str
    metadata: dict = field(default_factory=dict)
    rho: np.ndarray | None = None

    def __post_init__(self):
        if self.provenance not in (SEMI_ANALYTIC, FINITE_DIFFERENCE):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        if self.rho is None:
            object.__setattr__(self, "rho", charge_density(self.field))
        elif np.shape(self.rho) != self.field.x.shape:
            raise ValueError("rho must have the same length as the grid")

    @property
    def t(self) -> float:
        return self.field.t

    @property
    def x(self):
        return self.field.x


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def export_snapshot(s: Snapshot, path) -> Path:
    """Write ``path`` (CSV) and ``path.json`` (metadata); returns the CSV path."""
    path = Path(path)
    f = s.field
    table = np.column_stack([f.x, f.phi.real, f.phi.imag, f.chi.real, f.chi.imag, s.rho])
    meta = {"t": f.t, "equation": f.equation, "provenance": s.provenance}
    meta.update({k: v for k, v in f.metadata.items() if _jsonable(v)})
    meta.update({k: v for k, v in s.metadata.items() if _jsonable(v)})
    try:
        with open(path, "w", newline="\n") as fh:
            np.savetxt(fh, table, fmt=_FMT, delimiter=",", header=CSV_HEADER, comments="")
        with open(sidecar_path(path), "w", newline="\n") as fh:
            json.dump(meta, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write snapshot to {path}: {exc}") from exc
    return path


def import_snapshot(path) -> Snapshot:
    path = Path(path)
    try:
        with open(path) as fh:
            header = fh.readline().strip()
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        meta_file = sidecar_path(path)
        meta = json.loads(meta_file.read_text()) if meta_file.exists() else {}
    except OSError as exc:
        raise OSError(f"cannot read snapshot {path}: {exc}") from exc
    if header != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {header!r}")
    x, rphi, iphi, rchi, ichi, rho = table.T
    t = float(meta.pop("t", 0.0))
    equation = meta.pop("equation", "kg")
    provenance = meta.pop("provenance", FINITE_DIFFERENCE)
    f = SpinorField(x, rphi + 1j * iphi, rchi + 1j * ichi, t, equation)
    return Snapshot(f, provenance, meta, rho)


def _jsonable(v) -> bool:
    try:
        json.dumps(v)
    except (TypeError, ValueError):
        return False
    return True


def excluded_mask(x, intervals) -> np.ndarray:
    mask = np.zeros(np.shape(x), dtype=bool)
    for lo, hi in intervals or ():
        mask |= (x >= lo) & (x <= hi)
    return mask


def compare(a: Snapshot, b: Snapshot, t_tol: float = 1e-9, exclude=None):
    """Relative L2 and sup-norm differences of the charge densities, relative to ``a``.

    When the grids differ, both densities are linearly interpolated onto the
    coarser of the two (restricted to the common interval). Points inside
    ``exclude`` intervals are dropped; by default these are the intervals
    either snapshot lists under ``excluded_intervals`` (smooth-edge slopes).
    """
    if abs(a.t - b.t) > t_tol * max(1.0, abs(a.t)):
        raise GridMismatchError(f"snapshot times differ: {a.t} vs {b.t}")
    ra, rb = a.rho, b.rho
    if a.x.shape == b.x.shape and np.allclose(a.x, b.x, rtol=0, atol=1e-9 * max(1.0, np.ptp(a.x))):
        xa = a.x
    else:
        lo, hi = max(a.x[0], b.x[0]), min(a.x[-1], b.x[-1])
        if hi <= lo:
            raise GridMismatchError("snapshot grids do not overlap")
        coarse = a.x if a.field.dx >= b.field.dx else b.x
        xa = coarse[(coarse >= lo) & (coarse <= hi)]
        if xa.size < 2:
            raise GridMismatchError("grid overlap too small for interpolation")
        ra = np.interp(xa, a.x, a.rho)
        rb = np.interp(xa, b.x, b.rho)
    if exclude is None:
        exclude = [*a.field.metadata.get("excluded_intervals", []),
                   *b.field.metadata.get("excluded_intervals", []),
                   *a.metadata.get("excluded_intervals", []),
                   *b.metadata.get("excluded_intervals", [])]
    keep = ~excluded_mask(xa, exclude)
    ra, rb = ra[keep], rb[keep]
    if ra.size == 0:
        raise GridMismatchError("no grid points left after exclusion")
    diff = ra - rb
    norm2 = np.linalg.norm(ra)
    normi = np.max(np.abs(ra))
    if norm2 == 0:
        raise ValueError("reference density is identically zero")
    return {"t": float(a.t), "rel_l2": float(np.linalg.norm(diff) / norm2),
            "rel_sup": float(np.max(np.abs(diff)) / normi), "points": int(ra.size)}
