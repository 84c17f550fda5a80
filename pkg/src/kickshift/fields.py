"""Complex state container and observables.

A :class:`WaveField` stores one complex amplitude per grid node.  On the
cylindrical grid the stored quantity is the radially scaled
``u = sqrt(2*pi*rho) * psi`` (representation ``"u_scaled"``), which makes the
volume element a plain ``d rho * dz`` and keeps the radial kinetic operator
diagonal in sine space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import CARTESIAN_2E, CYLINDRICAL_RZ, Grid, transform_forward

PSI = "psi"
U_SCALED = "u_scaled"


class FieldError(ValueError):
    """Mismatched grids or representations."""


@dataclass
class WaveField:
    grid: Grid
    values: np.ndarray
    representation: str = PSI

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.complex128)
        if self.values.shape != self.grid.shape:
            raise FieldError(
                f"amplitude shape {self.values.shape} does not match grid {self.grid.shape}"
            )
        want_u = self.grid.system == CYLINDRICAL_RZ
        if (self.representation == U_SCALED) != want_u:
            raise FieldError(
                f"representation {self.representation!r} invalid for system {self.grid.system!r}"
            )

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.values.copy(), self.representation)

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.values) ** 2)) * self.grid.volume_element

    def norm(self) -> float:
        return float(np.sqrt(self.norm_squared()))

    def normalize(self) -> "WaveField":
        n = self.norm()
        if n == 0.0:
            raise FieldError("cannot normalize a zero field")
        self.values /= n
        return self


def _check_compatible(a: WaveField, b: WaveField):
    if a.grid is not b.grid and a.grid != b.grid:
        raise FieldError("fields live on different grids")
    if a.representation != b.representation:
        raise FieldError("fields use different representations")


def inner_product(a: WaveField, b: WaveField) -> complex:
    """``<a|b>``, conjugate-linear in ``a``."""
    _check_compatible(a, b)
    return complex(np.vdot(a.values, b.values) * a.grid.volume_element)


def fidelity(a: WaveField, b: WaveField) -> float:
    """``|<a|b>|^2`` for normalized fields; in [0, 1] up to rounding."""
    return abs(inner_product(a, b)) ** 2


def expectation_pz(psi: WaveField) -> float:
    """Canonical momentum along z; ``<p_z1 + p_z2>`` on two-electron grids.

    Equals the kinetic momentum whenever the vector potential is zero, which
    is when every experiment in this package samples it.
    """
    coeffs = transform_forward(psi.grid, psi.values)
    spec = psi.grid.spectral()
    weight = np.zeros(psi.grid.shape)
    for i, axis in enumerate(psi.grid.axes):
        if axis.boundary == "periodic":
            weight = weight + spec.mesh(i)
    num = float(np.sum(weight * np.abs(coeffs) ** 2)) * psi.grid.volume_element
    return num / psi.norm_squared()


def expectation_z(psi: WaveField) -> float:
    """``<z>`` (sum over both electron coordinates on 2e grids)."""
    dens = np.abs(psi.values) ** 2
    z = np.zeros(psi.grid.shape)
    for i, axis in enumerate(psi.grid.axes):
        if axis.boundary == "periodic":
            z = z + psi.grid.coordinate_mesh(i)
    num = float(np.sum(z * dens)) * psi.grid.volume_element
    return num / psi.norm_squared()


def kinetic_energy(psi: WaveField) -> float:
    """``<T>`` with the Laplacian applied spectrally (no radial correction)."""
    coeffs = transform_forward(psi.grid, psi.values)
    t = psi.grid.spectral().kinetic_quadratic()
    num = float(np.sum(t * np.abs(coeffs) ** 2)) * psi.grid.volume_element
    return num / psi.norm_squared()


def total_energy(psi: WaveField, potential) -> float:
    """``<T + V>``, including the -1/(8 rho^2) correction in u-representation."""
    v = potential.total_values()
    pot = float(np.sum(v * np.abs(psi.values) ** 2)) * psi.grid.volume_element
    return kinetic_energy(psi) + pot / psi.norm_squared()


def density_z(psi: WaveField):
    """Probability density along z, integrated over the remaining coordinate.

    Returns one array for 1D and cylindrical grids; a ``(P1, P2)`` pair of
    single-axis marginals for two-electron grids.  Each marginal integrates
    to 1 for a normalized field.
    """
    dens = np.abs(psi.values) ** 2 / psi.norm_squared()
    if psi.grid.system == CYLINDRICAL_RZ:
        d_rho = psi.grid.axes[0].spacing
        return np.sum(dens, axis=0) * d_rho
    if psi.grid.system == CARTESIAN_2E:
        dz1 = psi.grid.axes[0].spacing
        dz2 = psi.grid.axes[1].spacing
        return np.sum(dens, axis=1) * dz2, np.sum(dens, axis=0) * dz1
    return dens


@dataclass
class DensityTrace:
    """Time-resolved z-density with the classical drift overlay."""

    times: np.ndarray
    z_axis: np.ndarray
    density: np.ndarray  # shape (n_times, n_z)
    alpha_overlay: np.ndarray

    def check_normalized(self, tol: float = 1e-6) -> bool:
        dz = float(self.z_axis[1] - self.z_axis[0])
        sums = self.density.sum(axis=1) * dz
        return bool(np.all(np.abs(sums - 1.0) < tol))
