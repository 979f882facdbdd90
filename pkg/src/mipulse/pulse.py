"""Piecewise-constant laser-phase waveforms and their file format.

A :class:`PulseProgram` is an ordered list of ``(duration, phase)`` segments
at fixed Rabi frequency; the phase is the only control.  Bang-bang
waveforms built from :class:`BangAngles` keep their exact segment
structure so that downstream constraint integrals can use closed forms.

The on-disk format is a single UTF-8 JSON object::

    {"version": 1, "rabi_hz": ..., "label": "...",
     "segments": [{"duration_s": ..., "phase_rad": ...}, ...]}

Serialization is lossless (Python float repr round-trips binary64).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Sequence

__all__ = [
    "PulseProgram",
    "BangAngles",
    "wrap_phase",
    "make_constant",
    "make_torf",
    "make_sampled",
    "shift_axis",
    "serialize",
    "parse",
    "save_pulse",
    "load_pulse",
]

TWO_PI = 2 * math.pi


def wrap_phase(phase: float) -> float:
    """Wrap an angle to the interval (-pi, pi]; exact no-op when inside."""
    if -math.pi < phase <= math.pi:
        return phase
    wrapped = (phase + math.pi) % TWO_PI - math.pi
    if wrapped <= -math.pi:
        wrapped += TWO_PI
    return wrapped


@dataclass(frozen=True)
class PulseProgram:
    """Immutable phase waveform: segments of (duration_s, phase_rad).

    Durations are strictly positive; phases are stored wrapped to
    (-pi, pi].  An empty segment list is the zero-duration pulse.
    """

    rabi: float
    segments: tuple[tuple[float, float], ...]
    label: str = ""

    def __post_init__(self):
        if not (self.rabi > 0 and math.isfinite(self.rabi)):
            raise ValueError(f"rabi must be positive and finite, got {self.rabi}")
        cleaned = []
        for i, (duration, phase) in enumerate(self.segments):
            if not (math.isfinite(duration) and duration > 0):
                raise ValueError(f"segment {i}: duration must be > 0, got {duration}")
            if not math.isfinite(phase):
                raise ValueError(f"segment {i}: phase must be finite, got {phase}")
            cleaned.append((float(duration), wrap_phase(float(phase))))
        object.__setattr__(self, "segments", tuple(cleaned))

    @property
    def duration(self) -> float:
        """Total duration T in seconds."""
        return math.fsum(d for d, _ in self.segments)

    @property
    def durations(self) -> tuple[float, ...]:
        return tuple(d for d, _ in self.segments)

    @property
    def phases(self) -> tuple[float, ...]:
        return tuple(p for _, p in self.segments)

    @property
    def area(self) -> float:
        """Total pulse area rabi * T in radians."""
        return self.rabi * self.duration

    def relabel(self, label: str) -> "PulseProgram":
        return replace(self, label=label)


@dataclass(frozen=True)
class BangAngles:
    """Rotation angles of a symmetric bang-bang pulse (radians, all >= 0).

    First-order waveforms use (theta1, theta2, theta3) painted as segments
    theta1, theta2, theta3, theta2, theta1 with phases 0, pi, 0, pi, 0.
    Second-order waveforms add (theta4, theta5) and use the nine-segment
    palindrome theta1..theta5..theta1 with the same phase alternation.
    """

    theta1: float
    theta2: float
    theta3: float
    theta4: float | None = None
    theta5: float | None = None

    def __post_init__(self):
        got4, got5 = self.theta4 is not None, self.theta5 is not None
        if got4 != got5:
            raise ValueError("theta4 and theta5 must be given together")
        for name in ("theta1", "theta2", "theta3", "theta4", "theta5"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must be >= 0, got {value}")

    @property
    def order(self) -> str:
        return "second" if self.theta4 is not None else "first"

    @property
    def angles(self) -> tuple[float, ...]:
        if self.order == "first":
            return (self.theta1, self.theta2, self.theta3)
        return (self.theta1, self.theta2, self.theta3, self.theta4, self.theta5)

    @property
    def area(self) -> float:
        """Total pulse area rabi*T implied by the palindrome structure."""
        half = self.angles
        return 2 * math.fsum(half[:-1]) + half[-1]

    @property
    def net_rotation(self) -> float:
        """Signed rotation angle accumulated by the alternating segments."""
        signed = [(-1) ** k * theta for k, theta in enumerate(self.angles)]
        return 2 * math.fsum(signed[:-1]) + signed[-1]


def make_constant(
    theta: float,
    rabi: float,
    speed_correction: bool = False,
    eta: float = 0.0,
) -> PulseProgram:
    """Single-segment phase-0 pulse producing a rotation of ``theta``.

    Without correction the duration is ``theta/rabi``.  With
    ``speed_correction`` the duration is ``theta/[rabi (1 - eta^2/2)]``,
    compensating the second-order slowdown of the qubit drive.
    """
    if theta <= 0:
        raise ValueError(f"theta must be > 0, got {theta}")
    rate = rabi * (1 - 0.5 * eta**2) if speed_correction else rabi
    label = f"constant theta={theta:.6g}" + (" corrected" if speed_correction else "")
    return PulseProgram(rabi=rabi, segments=((theta / rate, 0.0),), label=label)


def make_torf(angles: BangAngles, rabi: float) -> PulseProgram:
    """Symmetric bang-bang pulse from its rotation angles.

    Zero angles collapse their segments (and adjacent equal phases merge),
    so e.g. (0, 0, theta) yields a single-segment constant pulse.  The
    total area is ``2(theta1+theta2)+theta3`` at first order and
    ``2(theta1+..+theta4)+theta5`` at second order.
    """
    half = angles.angles
    palindrome = half + half[-2::-1]
    segments: list[tuple[float, float]] = []
    for k, theta in enumerate(palindrome):
        if theta == 0:
            continue
        phase = 0.0 if k % 2 == 0 else math.pi
        if segments and segments[-1][1] == phase:
            segments[-1] = (segments[-1][0] + theta / rabi, phase)
        else:
            segments.append((theta / rabi, phase))
    label = f"bang-bang {angles.order}-order " + ",".join(f"{t:.6g}" for t in half)
    return PulseProgram(rabi=rabi, segments=tuple(segments), label=label)


def make_sampled(
    phases: Sequence[float],
    dt: float,
    rabi: float,
    label: str = "sampled",
) -> PulseProgram:
    """One segment of length ``dt`` per phase sample."""
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if len(phases) == 0:
        raise ValueError("phases must be a nonempty sequence")
    return PulseProgram(
        rabi=rabi, segments=tuple((dt, float(p)) for p in phases), label=label
    )


def shift_axis(pulse: PulseProgram, axis_angle: float) -> PulseProgram:
    """Offset every phase by ``axis_angle`` (mod 2 pi).

    Rotating the whole waveform in the equatorial plane turns an x-axis
    gate into a gate about any transverse axis.
    """
    return PulseProgram(
        rabi=pulse.rabi,
        segments=tuple((d, p + axis_angle) for d, p in pulse.segments),
        label=pulse.label,
    )


def serialize(pulse: PulseProgram) -> str:
    """Render a pulse as its JSON file format (lossless)."""
    payload = {
        "version": 1,
        "rabi_hz": pulse.rabi / TWO_PI,
        "label": pulse.label,
        "segments": [
            {"duration_s": d, "phase_rad": p} for d, p in pulse.segments
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def parse(text: str) -> PulseProgram:
    """Parse the JSON pulse format, validating every field.

    Raises ``ValueError`` naming the offending field or segment on missing
    fields, nonpositive durations, or non-finite phases.
    """
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"pulse file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ValueError("pulse file must contain a single JSON object")
    for key in ("version", "rabi_hz", "segments"):
        if key not in payload:
            raise ValueError(f"pulse file is missing required field {key!r}")
    if payload["version"] != 1:
        raise ValueError(f"unsupported pulse file version {payload['version']!r}")
    rabi_hz = payload["rabi_hz"]
    if not (isinstance(rabi_hz, (int, float)) and math.isfinite(rabi_hz) and rabi_hz > 0):
        raise ValueError(f"rabi_hz must be a positive finite number, got {rabi_hz!r}")
    segments = []
    for i, seg in enumerate(payload["segments"]):
        if not isinstance(seg, dict) or "duration_s" not in seg or "phase_rad" not in seg:
            raise ValueError(f"segment {i}: expected object with duration_s and phase_rad")
        duration, phase = seg["duration_s"], seg["phase_rad"]
        if not (isinstance(duration, (int, float)) and math.isfinite(duration) and duration > 0):
            raise ValueError(f"segment {i}: duration must be > 0, got {duration!r}")
        if not (isinstance(phase, (int, float)) and math.isfinite(phase)):
            raise ValueError(f"segment {i}: phase must be finite, got {phase!r}")
        segments.append((float(duration), float(phase)))
    return PulseProgram(
        rabi=TWO_PI * float(rabi_hz),
        segments=tuple(segments),
        label=str(payload.get("label", "")),
    )


def save_pulse(pulse: PulseProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize(pulse))


def load_pulse(path) -> PulseProgram:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
