"""Synthetic run directories written in the documented artifact formats."""

import csv
import hashlib
import json
import math
import struct

import numpy as np
import pytest

SNAPSHOT_MAGIC = b"KSDN"


def write_snapshot_file(path, system_code, axes, t, density):
    """axes: list of (n_points, spacing, origin_offset, stagger, boundary_code)."""
    with open(path, "wb") as fh:
        fh.write(SNAPSHOT_MAGIC)
        fh.write(struct.pack("<IBB", 1, system_code, len(axes)))
        for n, spacing, offset, stagger, bcode in axes:
            fh.write(struct.pack("<QddBB", n, spacing, offset, stagger, bcode))
        fh.write(struct.pack("<d", t))
        fh.write(np.ascontiguousarray(density, dtype="<f8").tobytes())


def write_manifest(root, preset, config, results, output_names):
    outputs = []
    for name in output_names:
        data = (root / name).read_bytes()
        outputs.append(
            {"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        )
    doc = {
        "preset": preset,
        "config": config,
        "version": "0.1.0",
        "wall_time_s": 1.0,
        "outputs": outputs,
        "results": results,
    }
    path = root / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


@pytest.fixture
def transport_run(tmp_path):
    """Synthetic transport run: a Gaussian ridge riding exactly on alpha(t)."""
    root = tmp_path / "transport"
    root.mkdir()
    times = np.linspace(0.0, 25.0, 26)
    z = np.linspace(-32.0, 31.5, 128)
    dz = z[1] - z[0]
    # Smooth clamped displacement reaching 50 per cent of max by mid-run.
    alpha = 10.0 * (1.0 - np.cos(np.pi * times / times[-1])) / 2.0
    with open(root / "density_zt.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_au", "z_au", "p_z", "alpha_au"])
        for ti, t in enumerate(times):
            dens = np.exp(-((z - alpha[ti]) ** 2) / 2.0)
            dens /= dens.sum() * dz
            for zi, zz in enumerate(z):
                w.writerow([f"{t:.17g}", f"{zz:.17g}", f"{dens[zi]:.17g}", f"{alpha[ti]:.17g}"])
    rho = (np.arange(64) + 0.5) * 0.5
    zz = (np.arange(128) - 64) * 0.5
    dens2 = np.exp(-(rho[:, None] ** 2 + (zz[None, :] - 10.0) ** 2) / 4.0)
    write_snapshot_file(
        root / "snapshot_000.ksdn",
        0,
        [(64, 0.5, 0.0, 1, 1), (128, 0.5, 0.0, 0, 0)],
        25.0,
        dens2,
    )
    write_manifest(
        root,
        "transport-surrogate",
        {"model": {"kind": "coulomb"}},
        {"z_mean_initial_au": 0.0, "alpha_final_au": 10.0},
        ["density_zt.csv", "snapshot_000.ksdn"],
    )
    return root


@pytest.fixture
def scan_run(tmp_path):
    """Synthetic phase-scan run following the fitted model exactly."""
    root = tmp_path / "scan"
    root.mkdir()
    b, phi0 = 0.17, 0.3
    thetas = np.linspace(0.0, math.pi / 2, 9)
    phis = (math.pi / 6, math.pi / 4, math.pi / 3, math.pi / 2)
    with open(root / "scan.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_rad", "phi_rad", "pz_au", "run_id"])
        for ph in phis:
            for th in thetas:
                pz = b * math.cos(ph + phi0) * math.sin(2 * th)
                w.writerow([f"{th:.17g}", f"{ph:.17g}", f"{pz:.17g}", "cell"])
    write_manifest(
        root,
        "phase-scan",
        {},
        {"fit_a_au": 0.0, "fit_b_au": b, "fit_phi0_rad": phi0},
        ["scan.csv"],
    )
    return root


@pytest.fixture
def chain_run(tmp_path):
    """Synthetic chain run: density hopping between wells."""
    root = tmp_path / "chain"
    root.mkdir()
    times = np.linspace(0.0, 9.0, 10)
    z = np.linspace(-16.0, 15.75, 128)
    dz = z[1] - z[0]
    centers = np.where(times < 4.5, -7.5, -2.5)
    with open(root / "density_zt.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_au", "z_au", "p_z", "alpha_au"])
        for ti, t in enumerate(times):
            dens = np.exp(-((z - centers[ti]) ** 2) * 2.0)
            dens /= dens.sum() * dz
            for zi, zz in enumerate(z):
                w.writerow([f"{t:.17g}", f"{zz:.17g}", f"{dens[zi]:.17g}", "0"])
    write_manifest(
        root,
        "chain4-roundtrip",
        {"model": {"kind": "chain", "site_spacing_au": 5.0, "n_sites": 4}},
        {"roundtrip_fidelity": 0.9},
        ["density_zt.csv"],
    )
    return root


@pytest.fixture
def helium_run(tmp_path):
    """Synthetic two-electron run with one (z1, z2) snapshot."""
    root = tmp_path / "helium"
    root.mkdir()
    z = (np.arange(128) - 64) * 0.5
    dens = np.exp(-(((z[:, None] - 5.0) ** 2) + ((z[None, :] - 5.0) ** 2)) / 3.0)
    write_snapshot_file(
        root / "snapshot_000.ksdn",
        1,
        [(128, 0.5, 0.0, 0, 0), (128, 0.5, 0.0, 0, 0)],
        1.366,
        dens,
    )
    write_manifest(
        root,
        "helium-singlet",
        {"state": {"spin": "singlet"}},
        {"z1_mean_au": 5.0},
        ["snapshot_000.ksdn"],
    )
    return root
