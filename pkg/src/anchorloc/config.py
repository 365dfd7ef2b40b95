"""Physical-layer and processing configuration objects.

All configs are frozen dataclasses with a ``validate()`` method that raises
:class:`~anchorloc.exceptions.ConfigurationError` listing every violated
invariant. ``to_dict``/``from_dict`` give the plain-JSON form used in files.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

from .exceptions import ConfigurationError

SPEED_OF_LIGHT = 2.998e8


class Polarization(str, enum.Enum):
    H = "H"
    V = "V"


class AoaAxis(str, enum.Enum):
    AZIMUTH = "azimuth"
    ELEVATION = "elevation"


def _inf_to_json(x):
    return "inf" if isinstance(x, float) and math.isinf(x) else x


def _json_to_float(x):
    if x is None:
        return math.inf
    return float(x)


class _DictMixin:
    def to_dict(self):
        out = {}
        for f in dataclasses.fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = list(v)
            out[f.name] = _inf_to_json(v)
        return out

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RadarConfig(_DictMixin):
    """FMCW radar front end with a two-element receive array.

    ``chirp_duration`` defaults to 1.024 ms so that one chirp holds the
    2048 samples taken at 2 MHz.
    """

    carrier_wavelength: float = 12.49e-3
    chirp_slope: float = 2e11
    chirp_duration: float = 1.024e-3
    sample_rate: float = 2e6
    samples_per_frame: int = 2048
    rx_spacing: float = 12.49e-3 / 2
    polarization: Polarization = Polarization.H
    aoa_axis: AoaAxis = AoaAxis.AZIMUTH

    def __post_init__(self):
        object.__setattr__(self, "polarization", Polarization(self.polarization))
        object.__setattr__(self, "aoa_axis", AoaAxis(self.aoa_axis))
        object.__setattr__(self, "samples_per_frame", int(self.samples_per_frame))

    @classmethod
    def horizontal(cls, **kw):
        return cls(polarization=Polarization.H, aoa_axis=AoaAxis.AZIMUTH, **kw)

    @classmethod
    def vertical(cls, **kw):
        return cls(polarization=Polarization.V, aoa_axis=AoaAxis.ELEVATION, **kw)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @property
    def bin_width(self):
        return self.sample_rate / self.samples_per_frame

    @property
    def range_per_hz(self):
        return SPEED_OF_LIGHT / (2.0 * self.chirp_slope)

    def beat_frequency(self, r):
        return 2.0 * self.chirp_slope * r / SPEED_OF_LIGHT

    def violations(self):
        v = []
        if not self.chirp_slope > 0:
            v.append("chirp_slope must be > 0")
        if not self.carrier_wavelength > 0:
            v.append("carrier_wavelength must be > 0")
        if not self.rx_spacing > 0:
            v.append("rx_spacing must be > 0")
        elif self.rx_spacing > self.carrier_wavelength / 2 * (1 + 1e-12):
            v.append("rx_spacing must be <= carrier_wavelength/2 for unambiguous AoA")
        if self.samples_per_frame < 8:
            v.append("samples_per_frame must be >= 8")
        if not self.sample_rate > 0:
            v.append("sample_rate must be > 0")
        elif self.sample_rate * self.chirp_duration < self.samples_per_frame * (1 - 1e-12):
            v.append("sample_rate*chirp_duration must be >= samples_per_frame")
        return v

    def validate(self):
        v = self.violations()
        if v:
            raise ConfigurationError(v)
        return self


@dataclass(frozen=True)
class AnchorConfig(_DictMixin):
    """Dual-polarization anchor: antenna set 1 is horizontal, set 2 vertical.

    ``cross_pol_isolation`` is the power suppression in dB applied to every
    path with a polarization mismatch; ``math.inf`` removes those paths.
    """

    position: tuple = (0.0, 0.0, 0.0)
    f1_mod: float = 80e3
    f2_mod: float = 100e3
    cross_pol_isolation: float = 20.0
    reflection_gain: float = 1.0
    path_loss: bool = False

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(x) for x in self.position))
        object.__setattr__(self, "cross_pol_isolation", _json_to_float(self.cross_pol_isolation))

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def modulation(self, polarization):
        return self.f1_mod if Polarization(polarization) is Polarization.H else self.f2_mod

    @property
    def mismatch_amplitude(self):
        if math.isinf(self.cross_pol_isolation):
            return 0.0
        return 10.0 ** (-self.cross_pol_isolation / 20.0)

    def violations(self, max_beat=None):
        v = []
        if self.f1_mod == self.f2_mod:
            v.append("f1_mod and f2_mod must differ")
        if self.cross_pol_isolation < 0:
            v.append("cross_pol_isolation must be >= 0 dB")
        if self.position != (0.0, 0.0, 0.0):
            v.append("anchor position is the anchor-frame origin and must be (0, 0, 0)")
        if max_beat is not None:
            for name in ("f1_mod", "f2_mod"):
                if getattr(self, name) < 10.0 * max_beat:
                    v.append(
                        f"{name}={getattr(self, name):g} Hz must be >= 10x the maximum "
                        f"beat frequency ({max_beat:g} Hz)"
                    )
        return v

    def validate(self, max_beat=None):
        v = self.violations(max_beat)
        if v:
            raise ConfigurationError(v)
        return self


@dataclass(frozen=True)
class NoiseModel(_DictMixin):
    noise_power: float = 0.0
    seed: int = 0

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def validate(self):
        if not self.noise_power >= 0:
            raise ConfigurationError("noise_power must be >= 0")
        return self


@dataclass(frozen=True)
class SearchBand(_DictMixin):
    """Spectral search interval ``[f_L, f_H]`` around one modulation tone.

    ``snr_threshold`` rides along for the outlier stage; the peak search
    itself does not use it.
    """

    f_L: float
    f_H: float
    guard_bins: int = 3
    snr_threshold: float = 4.0

    def __post_init__(self):
        if not self.f_L < self.f_H:
            raise ConfigurationError(f"search band requires f_L < f_H (got {self.f_L}, {self.f_H})")
        if self.guard_bins < 1:
            raise ConfigurationError("guard_bins must be >= 1")

    @classmethod
    def around(cls, f_center, half_width, **kw):
        return cls(f_center - half_width, f_center + half_width, **kw)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    @property
    def center(self):
        return 0.5 * (self.f_L + self.f_H)

    def overlaps(self, other):
        return self.f_L < other.f_H and other.f_L < self.f_H


def default_bands(anchor, guard_bins=3, snr_threshold=4.0):
    """Disjoint bands of half-width ``|f2 - f1| / 2`` around each tone."""
    half = abs(anchor.f2_mod - anchor.f1_mod) / 2.0
    return {
        Polarization.H: SearchBand.around(anchor.f1_mod, half, guard_bins=guard_bins, snr_threshold=snr_threshold),
        Polarization.V: SearchBand.around(anchor.f2_mod, half, guard_bins=guard_bins, snr_threshold=snr_threshold),
    }


def max_unambiguous_range(radar, anchor, margin_bins=2):
    """Largest range whose sideband pair stays inside the default bands."""
    half = abs(anchor.f2_mod - anchor.f1_mod) / 2.0
    return max(0.0, half - margin_bins * radar.bin_width) * radar.range_per_hz


@dataclass(frozen=True)
class FilterConfig(_DictMixin):
    snr_threshold: float = 4.0
    max_rx_range_diff: float = 0.5
    max_pairing_gap: float = 0.075

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def validate(self):
        bad = [f.name for f in dataclasses.fields(self) if not getattr(self, f.name) > 0]
        if bad:
            raise ConfigurationError([f"{name} must be > 0" for name in bad])
        return self


@dataclass(frozen=True)
class RadarPair(_DictMixin):
    """The H (azimuth) and V (elevation) radars mounted on the drone."""

    H: RadarConfig = field(default_factory=RadarConfig.horizontal)
    V: RadarConfig = field(default_factory=RadarConfig.vertical)

    def __getitem__(self, key):
        return getattr(self, Polarization(key).value)

    def to_dict(self):
        return {"H": self.H.to_dict(), "V": self.V.to_dict()}

    @classmethod
    def from_dict(cls, d):
        h = {"polarization": "H", "aoa_axis": "azimuth", **d.get("H", {})}
        v = {"polarization": "V", "aoa_axis": "elevation", **d.get("V", {})}
        return cls(H=RadarConfig(**h), V=RadarConfig(**v))
