"""Readers for the documented kickshift run artifacts.

Formats (all little-endian, all reproduced here from their published
layout, independent of the simulator):

* ``manifest.json`` — preset, config, outputs (path/sha256/bytes), results.
* ``density_zt.csv`` — long format ``t_au, z_au, p_z, alpha_au``.
* ``scan.csv`` — ``theta_rad, phi_rad, pz_au, run_id``.
* ``*.ksdn`` — magic ``KSDN``, ``<IBB`` version/system/n_axes, per axis
  ``<QddBB`` (n_points, spacing, origin_offset, stagger, boundary code),
  ``<d`` time, then row-major float64 density values.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class LoaderError(RuntimeError):
    pass


@dataclass(frozen=True)
class AxisInfo:
    n_points: int
    spacing: float
    origin_offset: float
    stagger: bool
    boundary: str

    def coordinates(self) -> np.ndarray:
        j = np.arange(self.n_points)
        if self.stagger:
            x = (j + 0.5) * self.spacing
        else:
            x = (j - self.n_points // 2) * self.spacing
        return x + self.origin_offset


@dataclass
class Manifest:
    """One run directory's manifest plus the directory it lives in."""

    root: Path
    preset: str
    config: dict
    results: dict
    outputs: list

    def path_of(self, name: str) -> Path:
        for o in self.outputs:
            if o["path"] == name:
                return self.root / name
        raise LoaderError(f"manifest for {self.preset!r} lists no output {name!r}")

    def paths_matching(self, prefix: str, suffix: str = "") -> list[Path]:
        return [
            self.root / o["path"]
            for o in self.outputs
            if o["path"].startswith(prefix) and o["path"].endswith(suffix)
        ]


def load_manifest(path, verify: bool = True) -> Manifest:
    """Read a manifest and (by default) verify every output's checksum."""
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise LoaderError(f"cannot read manifest {path}: {exc}") from exc
    for key in ("preset", "config", "results", "outputs"):
        if key not in d:
            raise LoaderError(f"manifest {path} is missing field {key!r}")
    root = path.parent
    if verify:
        for o in d["outputs"]:
            target = root / o["path"]
            if not target.exists():
                raise LoaderError(f"manifest output {target} does not exist")
            data = target.read_bytes()
            if hashlib.sha256(data).hexdigest() != o["sha256"]:
                raise LoaderError(f"checksum mismatch for {target}")
    return Manifest(
        root=root,
        preset=d["preset"],
        config=d["config"],
        results=d["results"],
        outputs=d["outputs"],
    )


def read_density_csv(path):
    """Return ``(times, z, density[t, z], alpha[t])`` from a density CSV."""
    times, z_values = [], []
    cells = {}
    alpha = {}
    try:
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                t = float(rec["t_au"])
                z = float(rec["z_au"])
                if t not in alpha:
                    times.append(t)
                    alpha[t] = float(rec["alpha_au"])
                if z not in cells:
                    cells[z] = {}
                    z_values.append(z)
                cells[z][t] = float(rec["p_z"])
    except (OSError, KeyError, ValueError) as exc:
        raise LoaderError(f"cannot read density CSV {path}: {exc}") from exc
    if not times:
        raise LoaderError(f"density CSV {path} is empty")
    dens = np.array([[cells[z][t] for z in z_values] for t in times])
    return np.asarray(times), np.asarray(z_values), dens, np.array([alpha[t] for t in times])


def read_scan_csv(path):
    """Return ``(theta, phi, pz[theta, phi])`` from a scan CSV."""
    thetas, phis = [], []
    rows = {}
    try:
        with open(path, newline="") as fh:
            for rec in csv.DictReader(fh):
                th, ph = float(rec["theta_rad"]), float(rec["phi_rad"])
                rows[(th, ph)] = float(rec["pz_au"])
                if th not in thetas:
                    thetas.append(th)
                if ph not in phis:
                    phis.append(ph)
    except (OSError, KeyError, ValueError) as exc:
        raise LoaderError(f"cannot read scan CSV {path}: {exc}") from exc
    if not rows:
        raise LoaderError(f"scan CSV {path} is empty")
    pz = np.empty((len(thetas), len(phis)))
    pz.fill(np.nan)
    for (th, ph), v in rows.items():
        pz[thetas.index(th), phis.index(ph)] = v
    if not np.all(np.isfinite(pz)):
        raise LoaderError(f"scan CSV {path} does not cover a full grid")
    return np.asarray(thetas), np.asarray(phis), pz


_SNAPSHOT_MAGIC = b"KSDN"
_SYSTEM_NAMES = {0: "cylindrical_rz", 1: "cartesian_2e", 2: "cartesian_1d"}
_BOUNDARY_NAMES = {0: "periodic", 1: "odd"}


def read_snapshot(path):
    """Return ``(system, axes, time, density)`` from a ``.ksdn`` file."""
    try:
        with open(path, "rb") as fh:
            if fh.read(4) != _SNAPSHOT_MAGIC:
                raise LoaderError(f"{path} is not a density snapshot")
            _version, sys_code, n_axes = struct.unpack("<IBB", fh.read(6))
            axes = []
            for _ in range(n_axes):
                n, spacing, offset, stagger, bcode = struct.unpack("<QddBB", fh.read(26))
                axes.append(
                    AxisInfo(n, spacing, offset, bool(stagger), _BOUNDARY_NAMES[bcode])
                )
            (t,) = struct.unpack("<d", fh.read(8))
            shape = tuple(a.n_points for a in axes)
            density = np.frombuffer(fh.read(), dtype="<f8").reshape(shape).copy()
    except OSError as exc:
        raise LoaderError(f"cannot read snapshot {path}: {exc}") from exc
    except (struct.error, ValueError, KeyError) as exc:
        raise LoaderError(f"corrupt snapshot {path}: {exc}") from exc
    return _SYSTEM_NAMES.get(sys_code, "unknown"), axes, t, density
