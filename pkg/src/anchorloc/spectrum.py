"""Per-frame spectral processing for the dual-frequency backscatter anchor.

The anchor's switch modulation splits the dechirped beat tone into two
sidebands at ``f_mod - f_beat`` and ``f_mod + f_beat``. Their midpoint
re-estimates the modulation frequency in every frame and their
half-separation is the geometric beat, ``f_beat = 2 k r / c``.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .config import SPEED_OF_LIGHT, SearchBand
from .exceptions import AmbiguousDetection, ConfigurationError, NoDetection

# Peaks closer than this (in bins) bias each other's parabolic vertex; they
# are refined jointly with the exact window kernel instead.
CLOSE_PAIR_BINS = 4.0
_FIT_MARGIN_BINS = 5


@functools.lru_cache(maxsize=8)
def hann(n):
    """Periodic Hann window (read-only, cached per length)."""
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)
    w.setflags(write=False)
    return w


@dataclass(frozen=True)
class Spectrum:
    """FFT of one RX channel, ordered by increasing frequency."""

    bin_frequencies: np.ndarray
    magnitudes_sq: np.ndarray
    complex_bins: np.ndarray
    n_samples: int

    @property
    def bin_width(self):
        return float(self.bin_frequencies[1] - self.bin_frequencies[0])

    def index_of(self, f):
        """Array index of the bin nearest to frequency ``f``."""
        i = int(round(f / self.bin_width)) + self.n_samples // 2
        return min(max(i, 0), self.n_samples - 1)


@dataclass(frozen=True)
class PeakPair:
    """Sideband pair of one antenna set.

    ``peak_power`` is the upper sideband's lobe power (see :func:`lobe_power`);
    ``snr`` uses the single peak bin as the detection statistic.
    """

    f_lower: float
    f_upper: float
    f_anchor_est: float
    f_beat: float
    peak_power: float
    snr: float
    upper_value: complex = 0j
    upper_index: int = -1
    lower_index: int = -1
    fitted: bool = False


def compute_spectrum(frame, sample_rate=None):
    """Hann-windowed FFT of both RX channels with the DC bin zeroed.

    ``sample_rate`` defaults to ``frame.sample_rate``. Returns one
    :class:`Spectrum` per channel.
    """
    fs = float(sample_rate if sample_rate is not None else frame.sample_rate)
    rx = np.asarray(frame.rx)
    n = rx.shape[-1]
    X = np.fft.fftshift(np.fft.fft(rx * hann(n), axis=-1), axes=-1)
    X[..., n // 2] = 0.0
    freqs = np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / fs))
    return tuple(Spectrum(freqs, np.abs(x) ** 2, x, n) for x in X)


def range_from_beat(f_beat, k):
    """Range in metres for a geometric beat frequency ``f_beat`` at slope ``k``."""
    if f_beat < 0:
        raise ValueError("f_beat must be >= 0")
    if not k > 0:
        raise ValueError("chirp slope must be > 0")
    return SPEED_OF_LIGHT * f_beat / (2.0 * k)


def parabolic_vertex(power, i):
    """Sub-bin offset of the peak at ``i`` from a parabola through log-power."""
    a, b, c = np.log(np.maximum(power[i - 1 : i + 2], np.finfo(float).tiny))
    denom = a - 2.0 * b + c
    if denom >= 0:
        return 0.0
    return float(np.clip(0.5 * (a - c) / denom, -0.5, 0.5))


def _dirichlet(x, n):
    x = np.asarray(x, dtype=float)
    s = np.sin(np.pi * x / n)
    out = np.empty(x.shape, dtype=complex)
    ok = np.abs(s) > 1e-12
    out[ok] = np.exp(1j * np.pi * x[ok] * (n - 1) / n) * np.sin(np.pi * x[ok]) / s[ok]
    xm = np.round(x[~ok] / n) * n
    out[~ok] = n * np.exp(1j * np.pi * xm * (n - 1) / n)
    return out


def hann_kernel(nu, bins, n):
    """DFT at integer ``bins`` of a unit tone at fractional bin ``nu``, Hann windowed."""
    x = nu - np.asarray(bins, dtype=float)
    return 0.5 * _dirichlet(x, n) - 0.25 * _dirichlet(x + 1, n) - 0.25 * _dirichlet(x - 1, n)


def fit_tone_pair(spec, lo_bin, hi_bin, starts):
    """Least-squares fit of two tones to the complex bins in ``[lo_bin, hi_bin]``.

    Bin numbers are signed (``f / bin_width``). Complex amplitudes are solved
    linearly for each candidate pair of frequencies, so only the two
    frequencies are searched. Returns the two fitted positions in bins,
    sorted, and their complex amplitudes in the same order.
    """
    n = spec.n_samples
    bins = np.arange(lo_bin, hi_bin + 1)
    X = spec.complex_bins[bins + n // 2]

    def amplitudes(p):
        A = np.stack([hann_kernel(p[0], bins, n), hann_kernel(p[1], bins, n)], axis=1)
        amp, *_ = np.linalg.lstsq(A, X, rcond=None)
        return A, amp

    def residual(p):
        A, amp = amplitudes(p)
        r = X - A @ amp
        return np.concatenate([r.real, r.imag])

    best = None
    for p0 in starts:
        sol = least_squares(residual, np.asarray(p0, dtype=float), xtol=1e-12, ftol=1e-12, gtol=1e-12)
        if best is None or sol.cost < best.cost:
            best = sol
    order = np.argsort(best.x)
    return best.x[order], amplitudes(best.x)[1][order]


def lobe_power(spec, index, half_width=2):
    """Tone power from the main-lobe energy around ``index``.

    Summing the lobe makes the estimate insensitive to where the tone falls
    between bins; a unit-amplitude tone reads 1 to within 0.1%.
    """
    n = spec.n_samples
    lo, hi = max(index - half_width, 0), min(index + half_width + 1, n)
    return float(spec.magnitudes_sq[lo:hi].sum()) / (n * float(np.sum(hann(n) ** 2)))


def _band_slice(spec, band):
    f = spec.bin_frequencies
    idx = np.nonzero((f >= band.f_L) & (f <= band.f_H))[0]
    if idx.size < 3 or idx[0] == 0 or idx[-1] == spec.n_samples - 1:
        raise ConfigurationError(f"search band [{band.f_L:g}, {band.f_H:g}] Hz is outside the spectrum")
    return idx


def band_snr(spec, band, peak_index, exclude):
    """Peak power over the summed band power outside the guard gaps."""
    idx = _band_slice(spec, band)
    keep = np.ones(idx.size, dtype=bool)
    for j in exclude:
        keep &= np.abs(idx - j) > band.guard_bins
    noise = float(spec.magnitudes_sq[idx[keep]].sum())
    peak = float(spec.magnitudes_sq[peak_index])
    return peak / noise if noise > 0 else math.inf


def find_peak_pair(
    spec,
    band,
    f_mod_nominal=None,
    *,
    symmetry_tol_bins=2.0,
    floor_db=10.0,
    dynamic_range_db=20.0,
):
    """Locate the sideband pair of one anchor antenna set inside ``band``.

    Candidate peaks are local maxima at least ``floor_db`` above the band's
    median power and within ``dynamic_range_db`` of the band maximum. Among
    all candidate pairs whose midpoint lies within ``symmetry_tol_bins`` of
    ``f_mod_nominal`` (default: band centre), the pair with the largest
    combined power wins. Each peak is refined by a log-parabolic vertex; a
    pair closer than ``CLOSE_PAIR_BINS``, or a single merged lobe, is refined
    by a joint two-tone fit instead.

    Raises :class:`NoDetection` when no usable peak exists and
    :class:`AmbiguousDetection` when peaks exist but none pair up
    symmetrically.
    """
    if f_mod_nominal is None:
        f_mod_nominal = band.center
    bw = spec.bin_width
    P = spec.magnitudes_sq
    idx = _band_slice(spec, band)
    Pb = P[idx]
    pmax = float(Pb.max())
    if pmax <= 0:
        raise NoDetection("empty band")
    floor = float(np.median(Pb))
    threshold = max(floor * 10 ** (floor_db / 10), pmax * 10 ** (-dynamic_range_db / 10))

    cands = [
        i
        for i in idx
        if P[i] > P[i - 1] and P[i] >= P[i + 1] and P[i] >= threshold and P[i] > floor
    ]
    if not cands:
        raise NoDetection("no peak above the noise floor")
    refined = {i: spec.bin_frequencies[i] + parabolic_vertex(P, i) * bw for i in cands}

    tol = symmetry_tol_bins * bw
    best = None
    for a in range(len(cands)):
        for b in range(a + 1, len(cands)):
            i, j = cands[a], cands[b]
            if abs(0.5 * (refined[i] + refined[j]) - f_mod_nominal) > tol:
                continue
            score = P[i] + P[j]
            if best is None or score > best[0]:
                best = (score, i, j)

    if best is not None:
        _, i_lo, i_hi = best
        f_lo, f_hi = refined[i_lo], refined[i_hi]
        fitted = False
        if f_hi - f_lo < CLOSE_PAIR_BINS * bw:
            c = 0.5 * (f_lo + f_hi) / bw
            h = 0.5 * (f_hi - f_lo) / bw
            f_lo, f_hi, amp_hi = _joint_refine(spec, c, [h])
            fitted = True
    else:
        near = [i for i in cands if abs(spec.bin_frequencies[i] - f_mod_nominal) <= tol]
        if not near:
            if len(cands) >= 2:
                raise AmbiguousDetection("no symmetric peak pair around the modulation frequency")
            raise NoDetection("single peak away from the modulation frequency")
        # one merged lobe: sidebands closer than the window resolution
        i0 = max(near, key=lambda i: P[i])
        f_lo, f_hi, amp_hi = _joint_refine(spec, refined[i0] / bw, [0.3, 0.7, 1.1])
        i_lo = i_hi = None
        fitted = True
        if abs(0.5 * (f_lo + f_hi) - f_mod_nominal) > tol:
            raise AmbiguousDetection("merged lobe does not resolve into a symmetric pair")

    if i_hi is None or fitted:
        i_hi = spec.index_of(f_hi)
        i_lo = spec.index_of(f_lo)
    snr = band_snr(spec, band, i_hi, (i_lo, i_hi))
    return PeakPair(
        f_lower=float(f_lo),
        f_upper=float(f_hi),
        f_anchor_est=0.5 * (f_lo + f_hi),
        f_beat=0.5 * (f_hi - f_lo),
        peak_power=abs(amp_hi) ** 2 if fitted else lobe_power(spec, i_hi),
        snr=snr,
        upper_value=complex(spec.complex_bins[i_hi]),
        upper_index=int(i_hi),
        lower_index=int(i_lo),
        fitted=fitted,
    )


def _joint_refine(spec, center_bin, half_seps):
    lo = int(math.floor(center_bin - max(half_seps))) - _FIT_MARGIN_BINS
    hi = int(math.ceil(center_bin + max(half_seps))) + _FIT_MARGIN_BINS
    starts = [(center_bin - h, center_bin + h) for h in half_seps]
    nu, amp = fit_tone_pair(spec, lo, hi, starts)
    return nu[0] * spec.bin_width, nu[1] * spec.bin_width, complex(amp[1])


def separate_dual_frequency(spec, bands, **kw):
    """Run :func:`find_peak_pair` independently in each of two disjoint bands.

    Returns a tuple with a :class:`PeakPair` or ``None`` per band.
    """
    b1, b2 = bands
    if b1.overlaps(b2):
        raise ConfigurationError("search bands overlap")
    out = []
    for band in (b1, b2):
        try:
            out.append(find_peak_pair(spec, band, band.center, **kw))
        except (NoDetection, AmbiguousDetection):
            out.append(None)
    return tuple(out)
