"""Pure numpy kernels; fallback for the compiled core."""
import numpy as np


def power_nonlinearity(u, p):
    """Return |u|^(p-1) u evaluated pointwise."""
    a2 = u.real * u.real + u.imag * u.imag
    if p == 3.0:
        return a2 * u
    with np.errstate(divide="ignore", invalid="ignore"):
        scale = np.where(a2 == 0.0, 0.0, np.power(a2, 0.5 * (p - 1.0)))
    return scale * u


def if_stage(a, v, b, k, c):
    """Return a*v + c*b*k."""
    return a * v + c * (b * k)


def ifrk4_update(v, k1, k2, k3, k4, e_full, e_half, dt):
    """Return the final integrating-factor RK4 combination."""
    return e_full * v + (dt / 6.0) * (
        e_full * k1 + 2.0 * (e_half * (k2 + k3)) + k4)


def inverse_k_energy(coeffs, wavenumbers):
    """Return sum over k != 0 of |c_k|^2 / k."""
    nz = wavenumbers != 0
    a2 = coeffs.real[nz] ** 2 + coeffs.imag[nz] ** 2
    return float(np.sum(a2 / wavenumbers[nz]))
