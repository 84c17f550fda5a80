"""Single-cycle pulse family.

The pulse is defined through its displacement vector

    alpha(tau) = [sin(4*w*tau)/128 - sin(2*w*tau)/32 + 3*w*tau/32] * E0/(4*w^2)

on the window ``tau = t - t_start in [0, T]`` with ``T = 4*pi/omega``.  The
vector potential is ``A = d alpha/dt``, strictly one-signed inside the window
and zero outside, so each pulse imparts a unidirectional drift.  At the end of
the window ``alpha(T) = (3*pi/8) * E0/(4*omega^2) = 1.17810 * U_p`` with the
scaling quantity ``U_p = E0/(4*omega^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: alpha(T) / U_p for every pulse of the family.
DISPLACEMENT_RATIO = 3.0 * math.pi / 8.0

#: 1 a.u. of field amplitude corresponds to this intensity in W/cm^2.
INTENSITY_AU_WPCM2 = 3.50945e16

#: Advisory threshold on omega / deltaE below which transport distorts.
DISTORTION_RATIO_MIN = 5.0


class PulseError(ValueError):
    pass


@dataclass(frozen=True)
class SingleCyclePulse:
    """One single-cycle kick: peak strength ``e0`` (a.u.), frequency ``omega``."""

    e0: float
    omega: float
    t_start: float = 0.0
    sign: int = 1

    def __post_init__(self):
        if self.omega <= 0:
            raise PulseError(f"omega must be positive, got {self.omega}")
        if self.e0 < 0:
            raise PulseError("e0 must be nonnegative; use sign for direction")
        if self.sign not in (1, -1):
            raise PulseError("sign must be +1 or -1")

    @property
    def duration(self) -> float:
        return 4.0 * math.pi / self.omega

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def up(self) -> float:
        """The ``E0/(4*omega^2)`` scaling quantity."""
        return self.e0 / (4.0 * self.omega**2)

    def displacement(self, t):
        """alpha(t); clamps to 0 before the window and alpha(T) after."""
        tau = np.clip(np.asarray(t, dtype=float) - self.t_start, 0.0, self.duration)
        w = self.omega
        alpha = (
            np.sin(4.0 * w * tau) / 128.0
            - np.sin(2.0 * w * tau) / 32.0
            + 3.0 * w * tau / 32.0
        ) * self.up
        out = self.sign * alpha
        return float(out) if np.isscalar(t) else out

    def vector_potential(self, t):
        """A(t) = d alpha/dt inside the window, 0 outside."""
        t_arr = np.asarray(t, dtype=float)
        tau = t_arr - self.t_start
        inside = (tau > 0.0) & (tau < self.duration)
        w = self.omega
        a = (self.e0 / (128.0 * w)) * (
            np.cos(4.0 * w * tau) - 2.0 * np.cos(2.0 * w * tau) + 3.0
        )
        out = self.sign * np.where(inside, a, 0.0)
        return float(out) if np.isscalar(t) else out

    def final_displacement(self) -> float:
        """alpha at the end of the window, ``sign * (3*pi/8) * U_p``."""
        return self.sign * DISPLACEMENT_RATIO * self.up


def design_for_displacement(
    alpha_target: float, omega: float, t_start: float = 0.0
) -> SingleCyclePulse:
    """Pulse whose end-of-window displacement equals ``alpha_target`` exactly."""
    if omega <= 0:
        raise PulseError(f"omega must be positive, got {omega}")
    if alpha_target == 0:
        raise PulseError("alpha_target must be nonzero")
    e0 = abs(alpha_target) * 4.0 * omega**2 / DISPLACEMENT_RATIO
    return SingleCyclePulse(e0, omega, t_start, sign=1 if alpha_target > 0 else -1)


def intensity_to_field(intensity_wpcm2: float) -> float:
    """Peak intensity in W/cm^2 -> field amplitude in a.u."""
    if intensity_wpcm2 < 0:
        raise PulseError("intensity must be nonnegative")
    return math.sqrt(intensity_wpcm2 / INTENSITY_AU_WPCM2)


def field_to_intensity(e0: float) -> float:
    if e0 < 0:
        raise PulseError("field amplitude must be nonnegative")
    return e0**2 * INTENSITY_AU_WPCM2


def distortion_ratio(pulse: SingleCyclePulse, delta_e: float) -> tuple[float, bool]:
    """``omega / deltaE`` and an advisory distortion flag.

    Transport stays clean when the pulse oscillates much faster than the
    two-state beat; below ``DISTORTION_RATIO_MIN`` the kick visibly distorts
    the wavepacket.  The flag is advisory only.
    """
    if delta_e <= 0:
        raise PulseError("delta_e must be positive")
    ratio = pulse.omega / delta_e
    return ratio, ratio < DISTORTION_RATIO_MIN


@dataclass(frozen=True)
class PulseTrain:
    """Ordered single-cycle pulses with disjoint windows."""

    pulses: tuple[SingleCyclePulse, ...]

    def __post_init__(self):
        for a, b in zip(self.pulses, self.pulses[1:]):
            if b.t_start < a.t_end - 1e-12:
                raise PulseError("pulse windows overlap or are out of order")

    @property
    def t_end(self) -> float:
        return self.pulses[-1].t_end if self.pulses else 0.0

    @property
    def max_omega(self) -> float:
        return max((p.omega for p in self.pulses), default=0.0)

    def vector_potential(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        for p in self.pulses:
            out = out + p.vector_potential(t)
        return float(out) if np.isscalar(t) else out

    def displacement(self, t):
        out = np.zeros_like(np.asarray(t, dtype=float))
        for p in self.pulses:
            out = out + p.displacement(t)
        return float(out) if np.isscalar(t) else out

    def final_displacement(self) -> float:
        return sum(p.final_displacement() for p in self.pulses)


def train_from_displacements(
    targets, omega: float, t_start: float = 0.0, gap: float = 0.0
) -> PulseTrain:
    """Back-to-back designed pulses realizing the given displacement steps."""
    pulses = []
    t = t_start
    for alpha in targets:
        p = design_for_displacement(alpha, omega, t_start=t)
        pulses.append(p)
        t = p.t_end + gap
    return PulseTrain(tuple(pulses))
