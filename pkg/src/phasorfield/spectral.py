"""Fast transforms: plain/centered FFTs, scaled FFTs, and non-uniform FFTs.

Centered convention
-------------------
Most of this package indexes length-P axes by the centered index set
``I_P = {k : -P//2 <= k < P - P//2}`` (array slot ``p`` holds centered index
``p - P//2``).  ``cfft*``/``cifft*`` are DFTs in that convention::

    cfft(a)[k] = sum_j a[j] * exp(-2j*pi*j*k/P)    (j, k centered)

and satisfy the centered circular-convolution identity

    cifft(cfft(a) * cfft(b))[p] = sum_j a[j] * b[wrap(p - j)]

with ``wrap`` reducing the lag into ``I_P`` mod P.  When every needed lag
already lies in ``I_P`` the wrap is inactive and the product computes an
exact linear convolution, which is how all propagation convolutions in this
package are arranged.

Scaled FFT
----------
``sfft_1d`` evaluates ``U[k] = sum_n u[n] * exp(-2j*pi/M * alpha *
(n-o)*(k-o))`` for an arbitrary real scale ``alpha`` via chirp factorization:
``(n-o)(k-o) = [(n-o)^2 + (k-o)^2 - (k-n)^2] / 2`` turns the sum into one
linear convolution against the chirp kernel ``exp(+1j*pi*alpha*l^2/M)``,
computed exactly with zero-padded FFTs.  ``alpha = 1, o = 0`` reproduces the
ordinary DFT.

Non-uniform FFT
---------------
``nufft1`` (points -> modes, exponent ``-1j``) and ``nufft2`` (modes ->
points, exponent ``+1j``) use Gaussian gridding on a 2x-oversampled fine
grid.  The deconvolution divides by the exact discrete window transform
(the DFT of the truncated spread stencil), so points lying exactly on fine
grid nodes are reproduced to roundoff; ``nufft2`` is the exact structural
adjoint of ``nufft1`` (same stencils, same deconvolution), so the inner
product identity ``<nufft1(c), V> = <c, nufft2(V)>`` holds to machine
precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.fft import next_fast_len

from .core import ValidationError, _require

__all__ = [
    "dft_2d",
    "idft_2d",
    "fft_2d",
    "ifft_2d",
    "cfft_2d",
    "cifft_2d",
    "cfft_n",
    "cifft_n",
    "SfftPlan",
    "sfft_1d",
    "sfft_2d",
    "sfft_2d_centered",
    "NufftPlan",
    "nufft1",
    "nufft2",
    "next_fast_len",
]


# ---------------------------------------------------------------------------
# Plain and centered FFTs
# ---------------------------------------------------------------------------


def dft_2d(u: np.ndarray) -> np.ndarray:
    """Quadratic-cost 2D DFT by explicit matrices (reference implementation)."""
    u = np.asarray(u, dtype=np.complex128)
    _require(u.ndim == 2, "dft_2d takes a 2D array")
    ny, nx = u.shape
    my = np.exp(-2j * np.pi * np.outer(np.arange(ny), np.arange(ny)) / ny)
    mx = np.exp(-2j * np.pi * np.outer(np.arange(nx), np.arange(nx)) / nx)
    return my @ u @ mx.T


def idft_2d(u: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft_2d` (scaled by 1/(ny*nx))."""
    u = np.asarray(u, dtype=np.complex128)
    _require(u.ndim == 2, "idft_2d takes a 2D array")
    ny, nx = u.shape
    my = np.exp(2j * np.pi * np.outer(np.arange(ny), np.arange(ny)) / ny)
    mx = np.exp(2j * np.pi * np.outer(np.arange(nx), np.arange(nx)) / nx)
    return (my @ u @ mx.T) / (ny * nx)


def fft_2d(u: np.ndarray) -> np.ndarray:
    """Forward 2D FFT over the last two axes (unnormalized)."""
    return np.fft.fft2(u)


def ifft_2d(u: np.ndarray) -> np.ndarray:
    """Inverse 2D FFT over the last two axes (1/N normalized)."""
    return np.fft.ifft2(u)


def cfft_n(u: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Centered-index forward DFT over ``axes``."""
    return np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(u, axes=axes), axes=axes), axes=axes)


def cifft_n(u: np.ndarray, axes: tuple[int, ...]) -> np.ndarray:
    """Centered-index inverse DFT over ``axes``."""
    return np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(u, axes=axes), axes=axes), axes=axes)


def cfft_2d(u: np.ndarray) -> np.ndarray:
    """Centered-index forward DFT over the last two axes."""
    return cfft_n(u, axes=(-2, -1))


def cifft_2d(u: np.ndarray) -> np.ndarray:
    """Centered-index inverse DFT over the last two axes."""
    return cifft_n(u, axes=(-2, -1))


# ---------------------------------------------------------------------------
# Scaled FFT (chirp factorization)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SfftPlan:
    """Precomputed chirps for a scaled DFT of fixed (length, scale, offset)."""

    m: int
    alpha: float
    offset: int
    pad: int
    chirp: np.ndarray  # [m] pre/post multiplier exp(-1j*pi*alpha*(n-o)^2/m)
    kernel_fft: np.ndarray  # [pad] FFT of the embedded chirp kernel

    @classmethod
    def build(cls, m: int, alpha: float, offset: int = 0) -> "SfftPlan":
        _require(m >= 1, "transform length must be >= 1")
        _require(math.isfinite(alpha) and alpha != 0.0,
                 "scale factor must be finite and nonzero")
        _require(0 <= offset < m, "index offset must lie in [0, length)")
        n = np.arange(m, dtype=np.float64) - offset
        chirp = np.exp(-1j * np.pi * alpha * n * n / m)
        pad = next_fast_len(max(1, 2 * m - 1))
        lags = np.arange(1 - m, m)
        kernel = np.zeros(pad, dtype=np.complex128)
        kernel[lags % pad] = np.exp(1j * np.pi * alpha * lags * lags / m)
        chirp.setflags(write=False)
        kfft = np.fft.fft(kernel)
        kfft.setflags(write=False)
        return cls(m, float(alpha), int(offset), pad, chirp, kfft)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Transform the last axis of ``u`` (length must equal ``m``)."""
        u = np.asarray(u, dtype=np.complex128)
        _require(u.shape[-1] == self.m, "last axis length must match the plan")
        a = u * self.chirp
        buf = np.zeros(u.shape[:-1] + (self.pad,), dtype=np.complex128)
        buf[..., : self.m] = a
        conv = np.fft.ifft(np.fft.fft(buf, axis=-1) * self.kernel_fft, axis=-1)
        return conv[..., : self.m] * self.chirp


_SFFT_PLANS: dict[tuple[int, float, int], SfftPlan] = {}


def _sfft_plan(m: int, alpha: float, offset: int) -> SfftPlan:
    key = (int(m), float(alpha), int(offset))
    plan = _SFFT_PLANS.get(key)
    if plan is None:
        plan = SfftPlan.build(m, alpha, offset)
        _SFFT_PLANS[key] = plan
    return plan


def sfft_1d(u: np.ndarray, alpha: float, offset: int = 0, axis: int = -1) -> np.ndarray:
    """Scaled DFT along one axis.

    Computes ``U[k] = sum_n u[n] * exp(-2j*pi/M * alpha * (n-offset)*(k-offset))``
    over array positions ``n, k = 0..M-1``.  ``alpha = 1, offset = 0`` agrees
    with the ordinary forward DFT.
    """
    u = np.asarray(u, dtype=np.complex128)
    moved = np.moveaxis(u, axis, -1)
    plan = _sfft_plan(moved.shape[-1], alpha, offset)
    return np.moveaxis(plan.apply(moved), -1, axis)


def sfft_2d(u: np.ndarray, alpha: float, beta: float | None = None,
            offsets: tuple[int, int] = (0, 0)) -> np.ndarray:
    """Separable scaled DFT of the last two axes.

    ``alpha`` scales the last (x) axis and ``beta`` the second-to-last (y)
    axis; ``offsets = (offset_y, offset_x)`` in array-shape order.
    """
    if beta is None:
        beta = alpha
    out = sfft_1d(u, alpha, offset=offsets[1], axis=-1)
    return sfft_1d(out, beta, offset=offsets[0], axis=-2)


def sfft_2d_centered(u: np.ndarray, alpha: float, beta: float | None = None) -> np.ndarray:
    """Scaled DFT of the last two axes in the centered-index convention.

    Equivalent to :func:`sfft_2d` with per-axis offsets ``M//2``:
    ``U[ky, kx] = sum u[jy, jx] * exp(-2j*pi*(alpha*jx*kx/Mx + beta*jy*ky/My))``
    with all indices centered.  At ``alpha = beta = 1`` this matches
    :func:`cfft_2d` up to roundoff.
    """
    ny, nx = np.asarray(u).shape[-2:]
    return sfft_2d(u, alpha, beta, offsets=(ny // 2, nx // 2))


# ---------------------------------------------------------------------------
# Non-uniform FFT (Gaussian gridding)
# ---------------------------------------------------------------------------

_EPS_MIN = 1e-14
_EPS_MAX = 1e-1
_COORD_TOL = 1e-9


@dataclass(frozen=True)
class NufftPlan:
    """Geometry-independent precomputation for one (modes, eps) pair.

    ``w`` spread half-width grows with the accuracy request; each axis gets a
    fine grid of ``mrs[a] >= 2*modes[a]`` samples, a Gaussian variance
    ``taus[a]``, and the exact discrete deconvolution vector ``kers[a]``
    (the real DFT of the truncated spread stencil, evaluated at the centered
    output modes).
    """

    modes: tuple[int, ...]
    eps: float
    w: int
    mrs: tuple[int, ...]
    taus: tuple[float, ...]
    kers: tuple[np.ndarray, ...]

    @classmethod
    def build(cls, modes: tuple[int, ...], eps: float) -> "NufftPlan":
        _require(1 <= len(modes) <= 3, "supported dimensionalities are 1, 2, 3")
        _require(all(int(m) >= 1 for m in modes), "mode counts must be >= 1")
        _require(math.isfinite(eps) and _EPS_MIN <= eps <= _EPS_MAX,
                 f"accuracy target must lie in [{_EPS_MIN:g}, {_EPS_MAX:g}]")
        modes = tuple(int(m) for m in modes)
        w = max(2, math.ceil(math.log10(1.0 / eps)) + 2)
        mrs = []
        taus = []
        kers = []
        for m in modes:
            mr = next_fast_len(max(2 * m, 2 * w + 2))
            # Gaussian width balancing truncation against aliasing at the
            # actual oversampling ratio; at exactly 2x this is pi*w/(3*m^2).
            sigma = mr / m
            tau = math.pi * w / (sigma * (sigma - 0.5) * m * m)
            h = 2.0 * math.pi / mr
            k = np.arange(m) - m // 2
            ker = np.full(m, 1.0)
            for j in range(1, w + 1):
                ker += 2.0 * math.exp(-(j * h) ** 2 / (4.0 * tau)) * np.cos(k * j * h)
            assert (ker > 0).all(), "window transform must stay positive"
            ker.setflags(write=False)
            mrs.append(mr)
            taus.append(tau)
            kers.append(ker)
        return cls(modes, float(eps), w, tuple(mrs), tuple(taus), tuple(kers))

    def mode_slots(self) -> list[np.ndarray]:
        """Fine-grid DFT slots of the centered output modes, per axis."""
        return [(np.arange(m) - m // 2) % mr for m, mr in zip(self.modes, self.mrs)]

    def windows(self, pts: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        """Spread stencils for every point: per-axis indices and weights.

        Returns ``(idx, win)`` where ``idx[a]`` is ``[L, 2w+1]`` fine-grid
        indices and ``win[a]`` the matching Gaussian weights.  Axis ``a`` of
        the mode array pairs with point column ``d-1-a`` (x is the last axis).
        """
        d = len(self.modes)
        offs = np.arange(-self.w, self.w + 1)
        idx_list = []
        win_list = []
        for a in range(d):
            x = pts[:, d - 1 - a]
            mr = self.mrs[a]
            tau = self.taus[a]
            h = 2.0 * math.pi / mr
            xi = x - 2.0 * math.pi * np.floor(x / (2.0 * math.pi))
            i0 = np.floor(xi / h + 0.5).astype(np.int64)
            grid = i0[:, None] + offs[None, :]
            delta = grid * h - xi[:, None]
            idx_list.append(grid % mr)
            win_list.append(np.exp(-delta * delta / (4.0 * tau)))
        return idx_list, win_list


_NUFFT_PLANS: dict[tuple[tuple[int, ...], float], NufftPlan] = {}


def _nufft_plan(modes: tuple[int, ...], eps: float) -> NufftPlan:
    key = (tuple(int(m) for m in modes), float(eps))
    plan = _NUFFT_PLANS.get(key)
    if plan is None:
        plan = NufftPlan.build(key[0], key[1])
        _NUFFT_PLANS[key] = plan
    return plan


def _check_points(pts: np.ndarray, d: int) -> np.ndarray:
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    _require(pts.ndim == 2 and pts.shape[1] == d,
             f"points must be [L, {d}] for {d}-dimensional modes")
    _require(pts.shape[0] >= 1, "need at least one point")
    _require(bool(np.isfinite(pts).all()), "point coordinates must be finite")
    _require(bool((pts >= -math.pi - _COORD_TOL).all()
                  and (pts < math.pi + _COORD_TOL).all()),
             "point coordinates must lie in [-pi, pi)")
    return pts


def _outer(arrs: list[np.ndarray]) -> np.ndarray:
    return reduce(np.multiply.outer, arrs)


def nufft1(points: np.ndarray, values: np.ndarray, modes: tuple[int, ...],
           eps: float) -> np.ndarray:
    """Non-uniform points to uniform modes, exponent ``-1j``.

    ``U[k] = sum_l values[l] * exp(-1j * (kx*x_l + ky*y_l + kz*z_l))`` for
    centered integer modes ``k``; output shape is ``modes`` in array-shape
    order (x is the last axis), and relative error is bounded by ``eps``.
    Point coordinates must lie on the torus ``[-pi, pi)``.
    """
    modes = tuple(int(m) for m in modes)
    plan = _nufft_plan(modes, eps)
    pts = _check_points(points, len(modes))
    vals = np.asarray(values, dtype=np.complex128)
    _require(vals.shape == (pts.shape[0],), "values must be [L] matching the points")
    _require(bool(np.isfinite(vals).all()), "values must be finite")
    idx, win = plan.windows(pts)
    fine = np.zeros(plan.mrs, dtype=np.complex128)
    for l in range(pts.shape[0]):
        block = vals[l] * _outer([w[l] for w in win])
        fine[np.ix_(*[i[l] for i in idx])] += block
    spectrum = np.fft.fftn(fine)
    gathered = spectrum[np.ix_(*plan.mode_slots())]
    return gathered / _outer(list(plan.kers))


def nufft2(coefficients: np.ndarray, points: np.ndarray, eps: float) -> np.ndarray:
    """Uniform modes to non-uniform points, exponent ``+1j``.

    ``out[l] = sum_k coefficients[k] * exp(+1j * (kx*x_l + ky*y_l + kz*z_l))``
    over centered integer modes ``k``; exact structural adjoint of
    :func:`nufft1` built from the same stencils and deconvolution.
    """
    coeff = np.asarray(coefficients, dtype=np.complex128)
    _require(1 <= coeff.ndim <= 3, "mode array must be 1D, 2D, or 3D")
    _require(bool(np.isfinite(coeff).all()), "coefficients must be finite")
    plan = _nufft_plan(coeff.shape, eps)
    pts = _check_points(points, coeff.ndim)
    arr = np.zeros(plan.mrs, dtype=np.complex128)
    arr[np.ix_(*plan.mode_slots())] = coeff / _outer(list(plan.kers))
    fine = np.fft.ifftn(arr) * float(np.prod(plan.mrs))
    idx, win = plan.windows(pts)
    out = np.empty(pts.shape[0], dtype=np.complex128)
    for l in range(pts.shape[0]):
        block = fine[np.ix_(*[i[l] for i in idx])]
        out[l] = np.sum(block * _outer([w[l] for w in win]))
    return out
