"""Shared helpers for the test suite.

Everything here is deliberately simple and independent of the library's fast
paths: the literal-sum evaluators below re-derive the propagation formulas
with plain per-voxel loops so they can serve as oracles for the transforms
under test.
"""

from __future__ import annotations

import numpy as np

from phasorfield import (
    FrequencySlices,
    PointList,
    Scatterer,
    Scene,
    UniformRelay,
    build_kernel,
    simulate,
    to_frequency,
)
from phasorfield.core import SPEED_OF_LIGHT, PROPAGATION_SIGN, UniformGrid2D


def rel_l2(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.linalg.norm(b)
    if denom == 0.0:
        return float(np.linalg.norm(a - b))
    return float(np.linalg.norm(a - b) / denom)


def rel_linf(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.max(np.abs(b))
    if denom == 0.0:
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b)) / denom)


def centered_grid2d(n: int, pitch: float, z: float = 0.0) -> UniformGrid2D:
    origin = -(n - 1) * pitch / 2.0
    return UniformGrid2D(n, n, pitch, pitch, origin, origin, z)


def centered_relay(n: int, pitch: float, z: float = 0.0) -> UniformRelay:
    return UniformRelay(centered_grid2d(n, pitch, z))


def make_slices(scene: Scene, relay, illuminations: PointList, *,
                lambda_c: float = 0.06, delta_t: float = 16e-12,
                n_bins: int = 1024, t0: float = 0.0,
                falloff: bool = True) -> FrequencySlices:
    m = simulate(scene, relay, illuminations, delta_t=delta_t, n_bins=n_bins,
                 t0=t0, falloff=falloff)
    kernel = build_kernel(lambda_c, n_bins, delta_t)
    return to_frequency(m, kernel)


def two_scatterer_slices(**kwargs) -> FrequencySlices:
    """A small fixed scene used by several reconstruction tests."""
    scene = Scene(scatterers=(Scatterer((0.03, -0.02, 0.9), 1.0),
                              Scatterer((-0.05, 0.04, 1.0), 0.7)))
    relay = kwargs.pop("relay", centered_relay(16, 0.02))
    ill = kwargs.pop("illuminations",
                     PointList(np.array([[0.0, 0.0], [0.05, -0.03]])))
    return make_slices(scene, relay, ill, **kwargs)


def literal_field(slices: FrequencySlices, voxels: np.ndarray,
                  include_illumination: bool = True) -> np.ndarray:
    """Per-voxel evaluation of the propagation the fast paths compute.

    For each voxel x_v this sums, over frequencies and illuminations in
    ascending order,

        exp(s*1j*(w/c)*|x_p - x_v|) * sum_c coeff * exp(s*1j*(w/c)*r) / r

    with r = |x_c - x_v| and s the library's propagation sign.  Unlike the
    exponent-only backprojection oracle this keeps the kernel's 1/r, so it
    matches the fast propagators rather than the filtered-backprojection
    definition.
    """
    det = slices.relay.coordinates()
    from phasorfield.core import illumination_coordinates
    ill = illumination_coordinates(slices.relay, slices.illuminations)
    voxels = np.asarray(voxels, dtype=np.float64)
    out = np.zeros(voxels.shape[0], dtype=np.complex128)
    for vi, v in enumerate(voxels):
        r_det = np.sqrt(((det - v) ** 2).sum(axis=1))
        r_ill = np.sqrt(((ill - v) ** 2).sum(axis=1))
        acc = 0.0 + 0.0j
        for fi, w in enumerate(slices.frequencies):
            khat = w / SPEED_OF_LIGHT
            kern = np.exp(PROPAGATION_SIGN * 1j * khat * r_det) / r_det
            for p in range(ill.shape[0]):
                term = np.sum(slices.coefficients[p, :, fi] * kern)
                if include_illumination:
                    term = term * np.exp(PROPAGATION_SIGN * 1j * khat * r_ill[p])
                acc += term
        out[vi] = acc
    return out
