"""Structured grids and fast spectral transforms.

Two axis flavours are supported:

* periodic axes (Fourier basis, plain FFT), nodes spanning ``[-L/2, L/2)``;
* odd axes (sine basis, fast sine transform) on a staggered grid with
  Dirichlet behaviour at both ends -- used for the radial coordinate of the
  cylindrical system, where the wavefunction is stored as ``u = sqrt(2*pi*rho) * psi``
  and therefore vanishes at ``rho = 0``.

All transforms are orthonormal, so Parseval holds without extra weights:
``sum |f|^2 == sum |f_tilde|^2`` node-for-mode.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

CYLINDRICAL_RZ = "cylindrical_rz"
CARTESIAN_2E = "cartesian_2e"
CARTESIAN_1D = "cartesian_1d"

_SYSTEMS = (CYLINDRICAL_RZ, CARTESIAN_2E, CARTESIAN_1D)


class GridError(ValueError):
    """Invalid grid construction parameters."""


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Axis:
    """One coordinate axis of a structured grid.

    Parameters
    ----------
    n_points : int
        Number of nodes; must be a power of two.
    spacing : float
        Node spacing in a.u.
    origin_offset : float
        Shift added to every node coordinate.
    stagger : bool
        If True, node ``j`` sits at ``(j + 1/2) * spacing`` (no node at 0).
    boundary : str
        ``"periodic"`` or ``"odd"`` (Dirichlet via odd extension).
    """

    n_points: int
    spacing: float
    origin_offset: float = 0.0
    stagger: bool = False
    boundary: str = "periodic"

    def __post_init__(self):
        if not _is_power_of_two(self.n_points):
            raise GridError(f"axis size {self.n_points} is not a power of two")
        if not (self.spacing > 0):
            raise GridError(f"axis spacing must be positive, got {self.spacing}")
        if self.boundary not in ("periodic", "odd"):
            raise GridError(f"unknown boundary {self.boundary!r}")

    @property
    def extent(self) -> float:
        return self.n_points * self.spacing

    def coordinates(self) -> np.ndarray:
        """Node coordinates, reproducible bit-exactly from the axis fields."""
        j = np.arange(self.n_points)
        if self.stagger:
            x = (j + 0.5) * self.spacing
        else:
            x = (j - self.n_points // 2) * self.spacing
        return x + self.origin_offset

    def wavenumbers(self) -> np.ndarray:
        """Spectral coordinates matching the forward transform's ordering.

        Periodic: ``k_m = 2*pi*m/L`` in FFT wraparound order.
        Odd: ``kappa_m = pi*m/L`` for ``m = 1..n`` (DST-II mode ordering).
        """
        if self.boundary == "periodic":
            return 2.0 * np.pi * sfft.fftfreq(self.n_points, self.spacing)
        return np.pi * np.arange(1, self.n_points + 1) / self.extent


@dataclass(frozen=True)
class Grid:
    """A coordinate system with an ordered set of axes.

    Axis order fixes array index order: ``cylindrical_rz`` arrays are
    indexed ``[i_rho, j_z]``, ``cartesian_2e`` arrays ``[i_z1, j_z2]``.
    """

    system: str
    axes: tuple[Axis, ...]

    def __post_init__(self):
        if self.system not in _SYSTEMS:
            raise GridError(f"unknown grid system {self.system!r}")
        if self.system == CYLINDRICAL_RZ:
            if len(self.axes) != 2:
                raise GridError("cylindrical_rz needs exactly (rho, z) axes")
            rho, z = self.axes
            if not (rho.stagger and rho.boundary == "odd"):
                raise GridError("cylindrical rho axis must be staggered with odd boundary")
            if z.boundary != "periodic" or z.stagger:
                raise GridError("cylindrical z axis must be plain periodic")
        elif self.system == CARTESIAN_2E:
            if len(self.axes) != 2 or any(a.boundary != "periodic" or a.stagger for a in self.axes):
                raise GridError("cartesian_2e needs two plain periodic axes")
        else:
            if len(self.axes) != 1 or self.axes[0].boundary != "periodic" or self.axes[0].stagger:
                raise GridError("cartesian_1d needs one plain periodic axis")

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.n_points for a in self.axes)

    @property
    def volume_element(self) -> float:
        """Quadrature weight per node (d rho*dz, dz, or dz1*dz2)."""
        out = 1.0
        for a in self.axes:
            out *= a.spacing
        return out

    def coordinate_mesh(self, i: int) -> np.ndarray:
        """Coordinates of axis ``i`` broadcast against the full grid shape."""
        x = self.axes[i].coordinates()
        shape = [1] * len(self.axes)
        shape[i] = -1
        return x.reshape(shape)

    def spectral(self) -> "SpectralSpace":
        return SpectralSpace(self)


@dataclass(frozen=True)
class SpectralSpace:
    """Wavenumber bookkeeping for a grid's forward transform."""

    grid: Grid
    wavenumbers: tuple[np.ndarray, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self, "wavenumbers", tuple(a.wavenumbers() for a in self.grid.axes)
        )

    def mesh(self, i: int) -> np.ndarray:
        shape = [1] * len(self.grid.axes)
        shape[i] = -1
        return self.wavenumbers[i].reshape(shape)

    def kinetic_quadratic(self) -> np.ndarray:
        """``sum_i k_i^2 / 2`` broadcast over the spectral array shape."""
        out = np.zeros(self.grid.shape)
        for i in range(len(self.grid.axes)):
            out = out + 0.5 * self.mesh(i) ** 2
        return out


def build_grid(system: str, extents, spacings) -> Grid:
    """Build a grid from physical extents and spacings.

    ``extent/spacing`` must land on a power of two within one node.  For the
    cylindrical system pass ``(extent_rho, extent_z)`` / ``(d_rho, dz)``.
    """
    extents = np.atleast_1d(np.asarray(extents, dtype=float))
    spacings = np.atleast_1d(np.asarray(spacings, dtype=float))
    if spacings.size == 1:
        spacings = np.repeat(spacings, extents.size)
    if np.any(spacings <= 0) or np.any(extents <= 0):
        raise GridError("extents and spacings must be positive")

    sizes = []
    for L, d in zip(extents, spacings):
        n = int(round(L / d))
        if abs(L / d - n) > 1.0:
            raise GridError(f"extent {L} is not a node multiple of spacing {d}")
        if not _is_power_of_two(n):
            raise GridError(f"extent/spacing = {n} is not a power of two")
        sizes.append(n)

    if system == CYLINDRICAL_RZ:
        if len(sizes) != 2:
            raise GridError("cylindrical_rz needs (rho, z) extents")
        (n_rho, d_rho), (n_z, dz) = zip(sizes, spacings)
        axes = (
            Axis(n_rho, d_rho, stagger=True, boundary="odd"),
            Axis(n_z, dz),
        )
    elif system == CARTESIAN_2E:
        if len(sizes) == 1:
            sizes = sizes * 2
            spacings = np.repeat(spacings, 2)
        axes = tuple(Axis(n, d) for n, d in zip(sizes, spacings))
        if len(axes) != 2:
            raise GridError("cartesian_2e needs one or two extents")
    elif system == CARTESIAN_1D:
        if len(sizes) != 1:
            raise GridError("cartesian_1d needs a single extent")
        axes = (Axis(sizes[0], spacings[0]),)
    else:
        raise GridError(f"unknown grid system {system!r}")
    return Grid(system, axes)


def _axis_kind(axis: Axis) -> str:
    return "fft" if axis.boundary == "periodic" else "dst"


def transform_forward(grid: Grid, values: np.ndarray) -> np.ndarray:
    """Orthonormal forward transform along every axis of the grid."""
    if values.shape != grid.shape:
        raise GridError(f"field shape {values.shape} does not match grid {grid.shape}")
    out = values
    for i, axis in enumerate(grid.axes):
        if _axis_kind(axis) == "fft":
            out = sfft.fft(out, axis=i, norm="ortho")
        else:
            # DST-II of the odd extension; orthonormal so Parseval is exact.
            out = sfft.dst(out.real, type=2, axis=i, norm="ortho") + 1j * sfft.dst(
                out.imag, type=2, axis=i, norm="ortho"
            )
    return out


def transform_inverse(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Inverse of :func:`transform_forward`."""
    if coeffs.shape != grid.shape:
        raise GridError(f"coefficient shape {coeffs.shape} does not match grid {grid.shape}")
    out = coeffs
    for i, axis in enumerate(grid.axes):
        if _axis_kind(axis) == "fft":
            out = sfft.ifft(out, axis=i, norm="ortho")
        else:
            out = sfft.idst(out.real, type=2, axis=i, norm="ortho") + 1j * sfft.idst(
                out.imag, type=2, axis=i, norm="ortho"
            )
    return out
