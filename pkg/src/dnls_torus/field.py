"""Uniform grids on the torus [0, 2pi) and complex periodic fields.

Fourier convention used everywhere in the package::

    u(x) = sum_k c_k exp(i k x),     c_k = (1 / 2pi) int_0^{2pi} u(x) exp(-i k x) dx

With n collocation points the coefficients are ``fft(samples) / n`` and the
wavenumbers are the integers -n/2, ..., n/2 - 1, stored in FFT order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * math.pi
ZERO_MEAN_RTOL = 1e-12
ZERO_MEAN_FLOOR = 1e-300


@dataclass(frozen=True)
class TorusGrid:
    """Collocation grid x_j = 2 pi j / n with its wavenumber set."""

    n: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 8 or self.n % 2:
            raise ValueError(f"grid size must be an even integer >= 8, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @cached_property
    def points(self) -> np.ndarray:
        x = TWO_PI * np.arange(self.n) / self.n
        x.setflags(write=False)
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer wavenumbers (as floats) in FFT order."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        k.setflags(write=False)
        return k

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n

    @property
    def nyquist_index(self) -> int:
        """FFT-order index of the unpaired mode k = -n/2."""
        return self.n // 2

    def index(self, k: int) -> int:
        """FFT-order index of wavenumber ``k``."""
        if not -self.n // 2 <= k < self.n // 2:
            raise ValueError(f"wavenumber {k} outside the band of an n={self.n} grid")
        return k % self.n


def make_grid(n: int) -> TorusGrid:
    return TorusGrid(n)


def to_coefficients(samples: np.ndarray) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.complex128)
    return np.fft.fft(samples) / samples.shape[-1]


def from_coefficients(coefficients: np.ndarray) -> np.ndarray:
    coefficients = np.asarray(coefficients, dtype=np.complex128)
    return np.fft.ifft(coefficients) * coefficients.shape[-1]


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


class Field:
    """Complex periodic function held as grid samples and Fourier coefficients.

    Either representation may be supplied; the other is derived on first use
    and cached. Whichever was supplied is kept bit-for-bit.
    """

    __slots__ = ("grid", "_samples", "_coefficients")

    def __init__(self, grid: TorusGrid, samples=None, coefficients=None):
        if (samples is None) == (coefficients is None):
            raise ValueError("supply exactly one of samples or coefficients")
        self.grid = grid
        self._samples = None if samples is None else _frozen(samples)
        self._coefficients = None if coefficients is None else _frozen(coefficients)
        given = self._samples if self._samples is not None else self._coefficients
        if given.shape != (grid.n,):
            raise ValueError(f"expected {grid.n} values, got shape {given.shape}")

    @classmethod
    def from_samples(cls, grid, samples):
        return cls(grid, samples=samples)

    @classmethod
    def from_coefficients(cls, grid, coefficients):
        return cls(grid, coefficients=coefficients)

    @classmethod
    def from_function(cls, grid, func):
        """Sample a callable ``func(x)`` on the grid points."""
        return cls(grid, samples=func(grid.points))

    @classmethod
    def mode(cls, grid, k, amplitude=1.0):
        """The single Fourier mode ``amplitude * exp(i k x)``."""
        c = np.zeros(grid.n, dtype=np.complex128)
        c[grid.index(k)] = amplitude
        return cls(grid, coefficients=c)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, coefficients=np.zeros(grid.n, dtype=np.complex128))

    @property
    def samples(self) -> np.ndarray:
        if self._samples is None:
            self._samples = _frozen(from_coefficients(self._coefficients))
        return self._samples

    @property
    def coefficients(self) -> np.ndarray:
        if self._coefficients is None:
            self._coefficients = _frozen(to_coefficients(self._samples))
        return self._coefficients

    def coefficient(self, k: int) -> complex:
        return complex(self.coefficients[self.grid.index(k)])

    def __repr__(self):
        return f"Field(n={self.grid.n}, sup={np.max(np.abs(self.samples)):.6g})"

    def __add__(self, other):
        if isinstance(other, Field):
            _check_same_grid(self, other)
            return Field(self.grid, coefficients=self.coefficients + other.coefficients)
        return Field(self.grid, samples=self.samples + other)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            return NotImplemented
        return Field(self.grid, coefficients=complex(scalar) * self.coefficients)

    __rmul__ = __mul__

    def __neg__(self):
        return (-1.0) * self

    def conj(self) -> Field:
        return Field(self.grid, samples=np.conj(self.samples))

    def is_finite(self) -> bool:
        if self._coefficients is not None:
            return bool(np.all(np.isfinite(self._coefficients)))
        return bool(np.all(np.isfinite(self._samples)))

    def zero_mean_tolerance(self) -> float:
        return max(ZERO_MEAN_RTOL * float(np.max(np.abs(self.coefficients))), ZERO_MEAN_FLOOR)

    def is_zero_mean(self) -> bool:
        return abs(self.coefficients[0]) <= self.zero_mean_tolerance()

    def resample(self, n: int) -> Field:
        """Spectral interpolation (or truncation) onto an ``n``-point grid.

        The unpaired Nyquist mode keeps its wavenumber -m/2 where m is the
        smaller of the two sizes; it is dropped when truncating.
        """
        grid = TorusGrid(n)
        m = self.grid.n
        c = self.coefficients
        out = np.zeros(n, dtype=np.complex128)
        if n >= m:
            out[: m // 2] = c[: m // 2]
            out[n - m // 2:] = c[m // 2:]
        else:
            out[: n // 2] = c[: n // 2]
            out[n - n // 2 + 1:] = c[m - n // 2 + 1:]
        return Field(grid, coefficients=out)

    def to_dict(self) -> dict:
        """JSON-ready form listing only the nonzero modes."""
        rows = []
        order = np.argsort(self.grid.wavenumbers, kind="stable")
        for i in order:
            c = self.coefficients[i]
            if c != 0:
                rows.append([int(self.grid.wavenumbers[i]), float(c.real), float(c.imag)])
        return {"n": self.grid.n, "coefficients": rows}

    @classmethod
    def from_dict(cls, data: dict) -> Field:
        grid = TorusGrid(int(data["n"]))
        c = np.zeros(grid.n, dtype=np.complex128)
        for k, re, im in data["coefficients"]:
            c[grid.index(int(k))] = complex(float(re), float(im))
        return cls(grid, coefficients=c)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> Field:
        return cls.from_dict(json.loads(text))


def _check_same_grid(a: Field, b: Field):
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: n={a.grid.n} vs n={b.grid.n}")


def derivative(f: Field) -> Field:
    """Spectral d/dx; the Nyquist mode is zeroed."""
    c = 1j * f.grid.wavenumbers * f.coefficients
    c[f.grid.nyquist_index] = 0.0
    return Field(f.grid, coefficients=c)


def antiderivative_from_zero(f: Field) -> Field:
    """The periodic antiderivative V with V(0) = 0 of a zero-mean field.

    V(x) = sum_{k != 0} c_k (exp(ikx) - 1) / (ik). The constant is removed
    using the computed value at x = 0 so that V(0) is exactly zero.
    """
    if not f.is_zero_mean():
        raise ValueError(
            "antiderivative requires a zero-mean field "
            f"(|c_0| = {abs(f.coefficients[0]):.3e})")
    k = f.grid.wavenumbers
    c = np.zeros_like(f.coefficients)
    nz = k != 0
    c[nz] = f.coefficients[nz] / (1j * k[nz])
    w = from_coefficients(c)
    return Field(f.grid, samples=w - w[0])


def norm(f: Field, q: float = 2.0) -> float:
    """L^q norm by the uniform rectangle rule; ``q=math.inf`` gives the sup norm."""
    if not q >= 1:
        raise ValueError(f"norm exponent must be >= 1, got {q!r}")
    a = np.abs(f.samples)
    if math.isinf(q):
        return float(np.max(a))
    if q == 2:
        s = np.sum(a * a)
    else:
        s = np.sum(a ** q)
    return float((s * f.grid.spacing) ** (1.0 / q))


def random_zero_mean(grid: TorusGrid, seed: int, n_modes: int, decay: float = 1.0) -> Field:
    """Random field with |c_k| = |k|^-decay for 0 < |k| <= n_modes, uniform phases.

    c_0 = 0 exactly, and the result depends only on ``seed``.
    """
    if not 0 < n_modes < grid.n // 2:
        raise ValueError(f"n_modes must be in (0, {grid.n // 2}), got {n_modes}")
    if not decay > 0:
        raise ValueError("decay must be positive")
    rng = np.random.default_rng(seed)
    ks = np.concatenate([np.arange(1, n_modes + 1), -np.arange(1, n_modes + 1)])
    phases = rng.uniform(0.0, TWO_PI, size=ks.size)
    c = np.zeros(grid.n, dtype=np.complex128)
    c[ks % grid.n] = np.abs(ks) ** (-float(decay)) * np.exp(1j * phases)
    return Field(grid, coefficients=c)


def tail_fraction(f: Field, fraction: float = 0.1) -> float:
    """Share of spectral energy in the top ``fraction`` of wavenumbers by |k|."""
    e = np.abs(f.coefficients) ** 2
    total = float(np.sum(e))
    if total == 0.0:
        return 0.0
    cutoff = (1.0 - fraction) * (f.grid.n // 2)
    return float(np.sum(e[np.abs(f.grid.wavenumbers) > cutoff]) / total)
