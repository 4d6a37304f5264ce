"""Virtual-wavefront construction and design-rule helpers.

A transient measurement is turned into a small set of complex monochromatic
wavefronts by projecting each time histogram onto a Gaussian frequency
packet centered on a chosen virtual wavelength.  The remaining functions are
closed-form design rules for that virtual wave: resolution limits, frustum
scale-factor bounds, swept-volume bookkeeping, relay sampling-rate
certificates, and the storage compression won by detector downsampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    SPEED_OF_LIGHT,
    FrequencySlices,
    TransientMeasurement,
    ValidationError,
    _freeze,
    _require,
)

__all__ = [
    "PhasorKernel",
    "build_kernel",
    "to_frequency",
    "lateral_resolution",
    "ScaleBounds",
    "scale_bounds",
    "frustum_volume",
    "cuboid_volume",
    "SamplingReport",
    "sampling_report",
    "compression_factor",
]


@dataclass(frozen=True)
class PhasorKernel:
    """Gaussian frequency packet sampled on the DFT bins of a time window.

    ``bin_indices[i]`` is the positive DFT bin carrying angular frequency
    ``frequencies[i] = 2*pi*bin/(n_bins*delta_t)`` with Gaussian envelope
    weight ``weights[i]``; only bins whose weight reaches ``threshold`` are
    retained.
    """

    lambda_c: float
    delta_t: float
    n_bins: int
    threshold: float
    omega_c: float
    sigma: float
    bin_indices: np.ndarray
    frequencies: np.ndarray
    weights: np.ndarray

    @property
    def n_freq(self) -> int:
        return int(self.bin_indices.size)

    @property
    def lambda_star(self) -> float:
        """Shortest retained wavelength (sets the finest spatial detail)."""
        return 2.0 * math.pi * SPEED_OF_LIGHT / float(self.frequencies[-1])


def build_kernel(lambda_c: float, n_bins: int, delta_t: float,
                 threshold: float = 0.01) -> PhasorKernel:
    """Select and weight the DFT bins of a Gaussian packet at ``lambda_c``.

    The packet is centered at ``omega_c = 2*pi*c/lambda_c`` with spectral
    width ``sigma = c/(5*lambda_c)``; a positive bin ``k`` (1..n_bins//2) is
    retained when ``exp(-(omega_k - omega_c)^2 / (2*sigma^2)) >= threshold``.
    """
    _require(lambda_c > 0 and math.isfinite(lambda_c), "virtual wavelength must be > 0")
    _require(n_bins >= 2, "need at least two time bins")
    _require(delta_t > 0 and math.isfinite(delta_t), "bin width must be > 0")
    _require(0.0 < threshold < 1.0, "retention threshold must lie in (0, 1)")
    omega_c = 2.0 * math.pi * SPEED_OF_LIGHT / lambda_c
    sigma = SPEED_OF_LIGHT / (5.0 * lambda_c)
    bins = np.arange(1, n_bins // 2 + 1)
    omegas = 2.0 * math.pi * bins / (n_bins * delta_t)
    weights = np.exp(-((omegas - omega_c) ** 2) / (2.0 * sigma * sigma))
    keep = weights >= threshold
    if not keep.any():
        raise ValidationError(
            "no DFT bin reaches the retention threshold; the time window is too "
            "short or the virtual wavelength is outside the sampled band")
    return PhasorKernel(
        lambda_c=float(lambda_c),
        delta_t=float(delta_t),
        n_bins=int(n_bins),
        threshold=float(threshold),
        omega_c=omega_c,
        sigma=sigma,
        bin_indices=_freeze(bins[keep]),
        frequencies=_freeze(omegas[keep]),
        weights=_freeze(weights[keep]),
    )


def to_frequency(measurement: TransientMeasurement, kernel: PhasorKernel) -> FrequencySlices:
    """Project time histograms onto the kernel's weighted frequency bins.

    Coefficient for bin ``k``: ``FFT(histogram)[k] * weight_k *
    exp(-1j*omega_k*t0)`` — the forward DFT analyzes against
    ``exp(-1j*omega*t)`` and the ``t0`` phase refers bin 0 back to absolute
    time zero.
    """
    _require(measurement.n_bins == kernel.n_bins,
             "measurement and kernel disagree on the number of time bins")
    _require(math.isclose(measurement.delta_t, kernel.delta_t, rel_tol=1e-12),
             "measurement and kernel disagree on the bin width")
    spectrum = np.fft.fft(measurement.histograms, axis=2)
    coeff = spectrum[:, :, kernel.bin_indices] * kernel.weights
    coeff = coeff * np.exp(-1j * kernel.frequencies * measurement.t0)
    return FrequencySlices(
        frequencies=kernel.frequencies,
        coefficients=coeff,
        relay=measurement.relay,
        illuminations=measurement.illuminations,
    )


def lateral_resolution(lambda_c: float, z: float, aperture: float) -> float:
    """Diffraction-limited lateral resolution ``1.22 * lambda_c * z / aperture``."""
    _require(lambda_c > 0 and z > 0 and aperture > 0,
             "wavelength, depth, and aperture must be > 0")
    return 1.22 * lambda_c * z / aperture


@dataclass(frozen=True)
class ScaleBounds:
    """Admissible per-plane scale factors at one depth.

    ``pitch_limit`` is half the diffraction-limited resolution (largest
    useful output pitch); ``alpha_min`` keeps the widened output pitch
    ``delta_in/alpha`` at or below that limit; ``alpha_max`` is always 1.
    """

    pitch_limit: float
    alpha_min: float
    alpha_max: float = 1.0


def scale_bounds(delta_in: float, lambda_c: float, z: float, aperture: float) -> ScaleBounds:
    """Bounds on the depth-plane scale factor given relay pitch ``delta_in``."""
    _require(delta_in > 0, "input pitch must be > 0")
    res = lateral_resolution(lambda_c, z, aperture)
    return ScaleBounds(pitch_limit=res / 2.0, alpha_min=2.0 * delta_in / res)


def frustum_volume(x_in: float, y_in: float, z_in: float, z_out: float,
                   alpha: float, beta: float) -> float:
    """Volume swept by a depth-scaled grid whose extent grows linearly.

    The lateral extents grow as ``x(z) = x_in + (z - z_in)/alpha`` and
    ``y(z) = y_in + (z - z_in)/beta``; integrating ``x(z)*y(z)`` in closed
    form over ``[z_in, z_out]`` gives, with ``h = z_out - z_in``::

        h*x_in*y_in + (h^2/2)*(x_in/beta + y_in/alpha) + h^3/(3*alpha*beta)
    """
    _require(x_in > 0 and y_in > 0, "base extents must be > 0")
    _require(z_out >= z_in, "far plane must not precede the near plane")
    _require(alpha > 0 and beta > 0, "scale factors must be > 0")
    h = z_out - z_in
    return (h * x_in * y_in
            + 0.5 * h * h * (x_in / beta + y_in / alpha)
            + h ** 3 / (3.0 * alpha * beta))


def cuboid_volume(x_in: float, y_in: float, z_in: float, z_out: float) -> float:
    """Volume of the unscaled cuboid with the same base and depth span."""
    _require(x_in > 0 and y_in > 0, "base extents must be > 0")
    _require(z_out >= z_in, "far plane must not precede the near plane")
    return x_in * y_in * (z_out - z_in)


@dataclass(frozen=True)
class SamplingReport:
    """Relay sampling-rate certificate for one scatterer offset.

    ``ratio = 2|z|/|x|`` compares the lateral modulation wavelength on the
    relay against the depth one; an integer downsampling factor ``D`` is
    admissible when ``ratio > D``, so ``max_downsample = ceil(ratio) - 1``
    (unbounded when the scatterer is on-axis).
    """

    ratio: float
    lambda_sz: float
    lambda_sx: float
    max_downsample: float


def sampling_report(x_offset: float, z_offset: float, lambda_star: float,
                    confocal: bool = False) -> SamplingReport:
    """Certify lateral downsampling for a scatterer at the given offsets.

    ``x_offset`` is the lateral distance from the scatterer to a relay
    point, ``z_offset`` its depth from the relay plane, and ``lambda_star``
    the shortest retained wavelength.  Confocal capture halves the sampling
    wavelengths because illumination and detection phases add.
    """
    _require(lambda_star > 0, "shortest wavelength must be > 0")
    _require(z_offset != 0, "scatterer must be off the relay plane")
    lambda_sz = lambda_star / (4.0 if confocal else 2.0)
    if x_offset == 0.0:
        return SamplingReport(ratio=math.inf, lambda_sz=lambda_sz,
                              lambda_sx=math.inf, max_downsample=math.inf)
    ratio = 2.0 * abs(z_offset) / abs(x_offset)
    return SamplingReport(
        ratio=ratio,
        lambda_sz=lambda_sz,
        lambda_sx=ratio * lambda_sz,
        max_downsample=float(math.ceil(ratio) - 1),
    )


def compression_factor(n: int, d: int, t: int, f: int) -> float:
    """Storage ratio of the full capture to the downsampled frequency-domain one.

    Full capture stores ``n^2 * t`` real histogram values; keeping every
    ``d``-th detector per axis and ``f`` complex frequency coefficients
    stores ``(n//d)^2 * 2f``, so the ratio is ``n^2*t / ((n//d)^2 * 2f)``.
    """
    _require(n >= 1 and t >= 1 and f >= 1, "counts must be >= 1")
    _require(1 <= d <= n, "downsampling factor must lie in [1, n]")
    kept = n // d
    _require(kept >= 1, "downsampling must keep at least one detector per axis")
    return (n * n * t) / (kept * kept * 2.0 * f)
