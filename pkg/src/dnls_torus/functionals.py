"""Scalar functionals driving the blowup argument.

The pairing integral of a zero-mean field u is

    I(u) = int_0^{2pi} u(x) int_0^x conj(u(y)) dy dx = 2 pi i sum_{k != 0} |c_k|^2 / k,

which is purely imaginary. Everything else here (the blowup functional M,
the sign conditions, the lifespan bound and the comparison-ODE lower bound)
is built from it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .field import TWO_PI, Field, derivative, norm


@dataclass(frozen=True)
class ProblemParams:
    """Exponent ``p``, coupling ``lam`` and multiplier ``alpha``.

    ``alpha=None`` means "choose it from the data" (see :func:`choose_alpha`).
    A zero coupling is accepted here so that the linear flow can be stepped;
    :func:`dnls_torus.solver.integrate` rejects it.
    """

    p: float
    lam: complex
    alpha: complex | None = None

    def __post_init__(self):
        if not self.p > 1:
            raise ValueError(f"exponent p must exceed 1, got {self.p!r}")
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "lam", complex(self.lam))
        if self.alpha is not None:
            object.__setattr__(self, "alpha", complex(self.alpha))

    def with_alpha(self, alpha) -> ProblemParams:
        return ProblemParams(self.p, self.lam, alpha)

    @property
    def blowup_mode(self) -> bool:
        """Whether alpha satisfies Re(alpha) Re(lam) > 0."""
        return self.alpha is not None and self.alpha.real * self.lam.real > 0


def _require_zero_mean(u: Field, what: str):
    if not u.is_zero_mean():
        raise ValueError(
            f"{what} requires a zero-mean field (|c_0| = {abs(u.coefficients[0]):.3e})")


def pairing_integral(u: Field) -> complex:
    """I(u) from the spectral closed form; the real part is exactly zero."""
    _require_zero_mean(u, "pairing integral")
    s = kernels.inverse_k_energy(np.ascontiguousarray(u.coefficients), u.grid.wavenumbers)
    return complex(0.0, TWO_PI * s)


def blowup_functional(u: Field, alpha: complex) -> float:
    """M = Im(alpha * I(u))."""
    return (complex(alpha) * pairing_integral(u)).imag


def check_condition_i(u0: Field, lam: complex) -> bool:
    """Re(lam) * Im I(u0) > 0, strictly."""
    return complex(lam).real * pairing_integral(u0).imag > 0


def choose_alpha(u0: Field, lam: complex) -> float | None:
    """A multiplier satisfying both strict sign conditions, or ``None``.

    Because I(u0) is purely imaginary, the real choice sign(Re lam) works
    whenever any alpha does; the bound it produces is the optimal one.
    """
    if not check_condition_i(u0, lam):
        return None
    return math.copysign(1.0, complex(lam).real)


def alpha_conditions(u0: Field, lam: complex, alpha: complex) -> tuple[float, float]:
    """The two quantities that must both be positive: Re a Re lam and Im(a I)."""
    alpha = complex(alpha)
    return alpha.real * complex(lam).real, (alpha * pairing_integral(u0)).imag


def lifespan_bound(u0: Field, p: float, lam: complex) -> float:
    """Upper bound (2pi)^p / ((p-1)|Re lam|) * |I(u0)|^(-(p-1)/2) on the lifespan."""
    re_lam = complex(lam).real
    if re_lam == 0:
        raise ValueError("bound undefined: Re(lambda) = 0")
    i_abs = abs(pairing_integral(u0))
    if i_abs == 0:
        raise ValueError("bound infinite: pairing integral vanishes")
    return TWO_PI ** p / ((p - 1.0) * abs(re_lam)) * i_abs ** (-(p - 1.0) / 2.0)


def lifespan_from_alpha(m0: float, alpha: complex, p: float, lam: complex) -> float:
    """Blowup time of the comparison ODE for a given multiplier.

    (2pi)^p |alpha|^((p+1)/2) / ((p-1) Re alpha Re lam) * M0^(-(p-1)/2).
    Invariant under alpha -> c alpha for real c > 0.
    """
    alpha = complex(alpha)
    rate = alpha.real * complex(lam).real
    if rate <= 0:
        raise ValueError("need Re(alpha) * Re(lambda) > 0")
    if m0 <= 0:
        raise ValueError("need M(0) > 0")
    return (TWO_PI ** p * abs(alpha) ** ((p + 1.0) / 2.0)
            / ((p - 1.0) * rate) * m0 ** (-(p - 1.0) / 2.0))


def total_density(u: Field) -> complex:
    """int_T u dx = 2 pi c_0."""
    return complex(TWO_PI * u.coefficients[0])


def energy_E2(w: Field, dw: Field | np.ndarray | None = None) -> float:
    """E2(w) = int |w_x|^2 + (1/2) Im(|w|^2 conj(w) w_x) dx.

    ``dw`` overrides the spectral derivative; it is needed when w is only
    defined on [0, 2pi) and is not periodic.
    """
    ws = w.samples
    if dw is None:
        dws = derivative(w).samples
    else:
        dws = dw.samples if isinstance(dw, Field) else np.asarray(dw)
    a2 = (ws * np.conj(ws)).real
    integrand = (dws * np.conj(dws)).real + 0.5 * (a2 * np.conj(ws) * dws).imag
    return float(np.sum(integrand) * w.grid.spacing)


def holder_middle(u: Field, alpha: complex) -> float:
    """|alpha| ||u||_{L^1}^2, the first majorant of |M|."""
    return abs(complex(alpha)) * norm(u, 1.0) ** 2


def holder_majorant(u: Field, alpha: complex, p: float) -> float:
    """(2pi)^(2p/(p+1)) |alpha| ||u||_{L^(p+1)}^2."""
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p!r}")
    return TWO_PI ** (2.0 * p / (p + 1.0)) * abs(complex(alpha)) * norm(u, p + 1.0) ** 2


def ode_lower_bound(m0: float, t: float, p: float, lam: complex, alpha: complex) -> float:
    """Lower bound on M(t) from the comparison ODE.

    (M0^(-(p-1)/2) - (p-1)(2pi)^-p |alpha|^(-(p+1)/2) Re alpha Re lam t)^(-2/(p-1)).
    Returns ``math.inf`` once the bracket is no longer positive.
    """
    if not m0 > 0:
        raise ValueError(f"comparison bound needs M(0) > 0, got {m0!r}")
    alpha = complex(alpha)
    rate = alpha.real * complex(lam).real
    if rate <= 0:
        raise ValueError("comparison bound needs Re(alpha) * Re(lambda) > 0")
    bracket = (m0 ** (-(p - 1.0) / 2.0)
               - (p - 1.0) * TWO_PI ** (-p) * abs(alpha) ** (-(p + 1.0) / 2.0) * rate * t)
    if bracket <= 0:
        return math.inf
    return bracket ** (-2.0 / (p - 1.0))


def ode_singular_time(m0: float, p: float, lam: complex, alpha: complex) -> float:
    """Time at which :func:`ode_lower_bound` escapes to infinity."""
    return lifespan_from_alpha(m0, alpha, p, lam)
