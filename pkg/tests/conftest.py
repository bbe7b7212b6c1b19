import numpy as np
import pytest

from oddflow.spectral import Grid, SpectralVector, forward_transform, zero_scalar


@pytest.fixture(scope="session")
def grid16():
    return Grid(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid(32)


@pytest.fixture(scope="session")
def grid64():
    return Grid(64)


def field(grid, samples):
    return forward_transform(grid, samples)


def shear_state_fields(grid):
    """rho = 1, u = (0, sin x1) with exact coefficients."""
    u2 = zero_scalar(grid)
    u2.coeffs[1, 0] = -0.5j
    u2.coeffs[-1, 0] = 0.5j
    return zero_scalar(grid), SpectralVector(zero_scalar(grid), u2,
                                             divergence_free=True)


def dft_oracle(samples):
    """Direct O(n^4) DFT with the amplitude normalization (no FFT)."""
    n = samples.shape[0]
    x = np.arange(n) * (2 * np.pi / n)
    out = np.zeros((n, n), dtype=complex)
    kvals = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    for i, k1 in enumerate(kvals):
        for j, k2 in enumerate(kvals):
            phase = np.exp(-1j * (k1 * x[:, None] + k2 * x[None, :]))
            out[i, j] = np.sum(samples * phase) / n**2
    return out


def convolution_oracle(fc, gc, cutoff):
    """Truncated convolution of two coefficient arrays (direct sums)."""
    n = fc.shape[0]
    kvals = np.fft.fftfreq(n, d=1.0 / n).astype(int)
    out = np.zeros_like(fc)
    idx = {int(k): i for i, k in enumerate(kvals)}
    support = [(int(kvals[i]), int(kvals[j]))
               for i in range(n) for j in range(n)
               if fc[i, j] != 0]
    for i in range(n):
        k1 = int(kvals[i])
        if abs(k1) > cutoff:
            continue
        for j in range(n):
            k2 = int(kvals[j])
            if abs(k2) > cutoff:
                continue
            acc = 0.0
            for (q1, q2) in support:
                r1, r2 = k1 - q1, k2 - q2
                if abs(r1) > n // 2 - 1 or abs(r2) > n // 2 - 1:
                    continue
                acc += fc[idx[q1], idx[q2]] * gc[idx[r1], idx[r2]]
            out[i, j] = acc
    return out
