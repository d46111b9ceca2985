"""Shared oracles and builders for the test suite.

The spectral differentiators here are the independent oracle for the
production 4th-order stencils; they must never be imported by package code.
"""

import numpy as np

from ricci_dynamo.geometry import Metric2


def spectral_d1(f, axis):
    """Spectral first derivative on [0, 2pi) along the given axis."""
    n = f.shape[axis]
    k = np.fft.fftfreq(n, d=1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0  # odd derivative: drop the Nyquist mode
    shape = [1] * f.ndim
    shape[axis] = n
    fk = np.fft.fft(f, axis=axis)
    return np.real(np.fft.ifft(1j * k.reshape(shape) * fk, axis=axis))


def spectral_d2(f, axis):
    """Spectral second derivative on [0, 2pi) along the given axis."""
    n = f.shape[axis]
    k = np.fft.fftfreq(n, d=1.0 / n)
    shape = [1] * f.ndim
    shape[axis] = n
    fk = np.fft.fft(f, axis=axis)
    return np.real(np.fft.ifft(-(k.reshape(shape) ** 2) * fk, axis=axis))


def spectral_laplacian(field):
    """Componentwise flat Laplacian of a (2, N, N) field."""
    return np.stack([
        spectral_d2(field[0], 0) + spectral_d2(field[0], 1),
        spectral_d2(field[1], 0) + spectral_d2(field[1], 1),
    ])


def random_metric(rng, t=0.0):
    """Random well-conditioned positive-definite 2x2 metric."""
    a = rng.uniform(-1.0, 1.0, size=(2, 2))
    g = a @ a.T + 0.5 * np.eye(2)
    g[1, 0] = g[0, 1]
    return Metric2(g, t)


def random_periodic_field(rng, n, modes=3):
    """Random band-limited periodic scalar field on the N x N grid."""
    x = np.arange(n) * (2.0 * np.pi / n)
    xx, yy = np.meshgrid(x, x, indexing="ij")
    field = np.zeros((n, n))
    for _ in range(modes):
        kx, ky = rng.integers(-3, 4, size=2)
        amp, phase = rng.normal(), rng.uniform(0, 2 * np.pi)
        field += amp * np.cos(kx * xx + ky * yy + phase)
    return field
