# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled pointwise kernels for the time stepper.

Mirrors :mod:`dnls_torus._pykernels` exactly in signature and semantics.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def power_nonlinearity(const double complex[::1] u, double p):
    """Return |u|^(p-1) u evaluated pointwise."""
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double a2, scale, half = 0.5 * (p - 1.0)
    cdef bint cubic = p == 3.0
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    for i in range(n):
        a2 = u[i].real * u[i].real + u[i].imag * u[i].imag
        if cubic:
            scale = a2
        elif a2 == 0.0:
            scale = 0.0
        else:
            scale = pow(a2, half)
        o[i] = scale * u[i]
    return out


def if_stage(const double complex[::1] a, const double complex[::1] v,
             const double complex[::1] b, const double complex[::1] k,
             double c):
    """Return a*v + c*b*k."""
    cdef Py_ssize_t i, n = v.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    for i in range(n):
        o[i] = a[i] * v[i] + c * (b[i] * k[i])
    return out


def ifrk4_update(const double complex[::1] v,
                 const double complex[::1] k1, const double complex[::1] k2,
                 const double complex[::1] k3, const double complex[::1] k4,
                 const double complex[::1] e_full,
                 const double complex[::1] e_half, double dt):
    """Return the final integrating-factor RK4 combination."""
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double w = dt / 6.0
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    for i in range(n):
        o[i] = e_full[i] * v[i] + w * (
            e_full[i] * k1[i] + 2.0 * (e_half[i] * (k2[i] + k3[i])) + k4[i])
    return out


def inverse_k_energy(const double complex[::1] coeffs,
                     const double[::1] wavenumbers):
    """Return sum over k != 0 of |c_k|^2 / k."""
    cdef Py_ssize_t i, n = coeffs.shape[0]
    cdef double total = 0.0, a2
    for i in range(n):
        if wavenumbers[i] != 0.0:
            a2 = coeffs[i].real * coeffs[i].real + coeffs[i].imag * coeffs[i].imag
            total += a2 / wavenumbers[i]
    return total
