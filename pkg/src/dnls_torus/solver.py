"""Time integration of  i u_t + u_xx = lam (|u|^(p-1) u)_x  on the torus.

Each Fourier mode obeys  c_k' = -i k^2 c_k + lam k N_k  with N = |u|^(p-1) u.
The linear part is integrated exactly (integrating factor) and the
nonlinear part with classical RK4. Steps are controlled by step doubling.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .field import TWO_PI, Field, TorusGrid, antiderivative_from_zero, derivative, norm, tail_fraction
from .functionals import ProblemParams, check_condition_i, choose_alpha, energy_E2, lifespan_bound

TRAJECTORY_COLUMNS = ("t", "M", "total_density_abs", "l2", "lp1", "sup")
EXTRA_COLUMNS = ("l1", "tail_fraction")
DENSITY_RTOL = 1e-10
VERDICT_SLACK = 1e-6


class NonFiniteStateError(FloatingPointError):
    """A step produced NaN or infinite coefficients."""


class TotalDensityError(RuntimeError):
    """The spatial mean drifted away from zero; M is no longer meaningful."""


class Trigger(str, Enum):
    SUP_THRESHOLD = "sup_threshold"
    DT_FLOOR = "dt_floor"
    NONFINITE_VALUE = "nonfinite_value"
    T_MAX_REACHED = "t_max_reached"


class Verdict(str, Enum):
    CONSISTENT = "consistent"
    BOUND_VIOLATED = "bound_violated"
    NO_BLOWUP_EXPECTED = "no_blowup_expected"
    INCONCLUSIVE = "inconclusive"


def default_dealias_factor(p: float) -> float:
    """(p+1)/2 for odd integer p (exact dealiasing), otherwise 3/2."""
    if float(p).is_integer() and int(p) % 2 == 1:
        return max(1.5, (p + 1.0) / 2.0)
    return 1.5


@dataclass(frozen=True)
class SolverConfig:
    dt_init: float
    dt_min: float
    t_max: float
    sample_interval: float
    step_tolerance: float = 1e-8
    blowup_sup_threshold: float = 1e8
    dealias_factor: float | None = None
    tail_threshold: float = 1e-4

    def __post_init__(self):
        for name in ("dt_init", "dt_min", "t_max", "sample_interval", "step_tolerance"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if not self.dt_min < self.dt_init <= self.sample_interval <= self.t_max:
            raise ValueError("need dt_min < dt_init <= sample_interval <= t_max")
        if self.dealias_factor is not None and not self.dealias_factor >= 1:
            raise ValueError("dealias_factor must be >= 1")
        if not self.blowup_sup_threshold > 0:
            raise ValueError("blowup_sup_threshold must be positive")

    def resolved_dealias_factor(self, p: float) -> float:
        if self.dealias_factor is None:
            return default_dealias_factor(p)
        return float(self.dealias_factor)


def padded_size(n: int, factor: float) -> int:
    m = int(math.ceil(n * factor - 1e-9))
    return m + (m % 2)


class _Stepper:
    """Precomputed data for stepping one grid and parameter set."""

    def __init__(self, grid: TorusGrid, p: float, lam: complex, dealias_factor: float,
                 backend=None):
        self.grid = grid
        self.p = float(p)
        self.lam = complex(lam)
        self.m = padded_size(grid.n, dealias_factor)
        self.k = grid.wavenumbers
        self.linear = -1j * self.k ** 2
        self.rhs_factor = self.lam * self.k.astype(np.complex128)
        self.rhs_factor[grid.nyquist_index] = 0.0
        self.ones = np.ones(grid.n, dtype=np.complex128)
        self.kern = backend or kernels
        self._exp_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def exponentials(self, dt):
        e = self._exp_cache.get(dt)
        if e is None:
            e = (np.exp(self.linear * dt), np.exp(self.linear * (0.5 * dt)))
            if len(self._exp_cache) > 64:
                self._exp_cache.clear()
            self._exp_cache[dt] = e
        return e

    def pointwise(self, c):
        """|u|^(p-1) u projected back onto the grid band, dealiased by padding."""
        n, m = self.grid.n, self.m
        h = n // 2
        if m == n:
            padded = c
        else:
            padded = np.zeros(m, dtype=np.complex128)
            padded[:h] = c[:h]
            padded[m - h:] = c[h:]
        u = np.fft.ifft(padded) * m
        nl = np.fft.fft(self.kern.power_nonlinearity(u, self.p)) / m
        if m == n:
            return nl
        out = np.empty(n, dtype=np.complex128)
        out[:h] = nl[:h]
        out[h:] = nl[m - h:]
        return out

    def rhs(self, c):
        """Nonlinear part of c' in coefficient space: -i * (lam d/dx N)_k."""
        if self.lam == 0:
            return np.zeros_like(c)
        return self.rhs_factor * self.pointwise(c)

    def step(self, c, dt, k1=None):
        e_full, e_half = self.exponentials(dt)
        kern = self.kern
        if k1 is None:
            k1 = self.rhs(c)
        k2 = self.rhs(kern.if_stage(e_half, c, e_half, k1, 0.5 * dt))
        k3 = self.rhs(kern.if_stage(e_half, c, self.ones, k2, 0.5 * dt))
        k4 = self.rhs(kern.if_stage(e_full, c, e_half, k3, dt))
        return kern.ifrk4_update(c, k1, k2, k3, k4, e_full, e_half, dt)


def nonlinearity(u: Field, p: float, lam: complex, dealias_factor: float | None = None) -> Field:
    """lam * d/dx (|u|^(p-1) u) with the pointwise product evaluated on a padded grid."""
    if not p > 1:
        raise ValueError(f"exponent p must exceed 1, got {p!r}")
    factor = default_dealias_factor(p) if dealias_factor is None else dealias_factor
    st = _Stepper(u.grid, p, lam, factor)
    c = st.pointwise(np.ascontiguousarray(u.coefficients))
    return Field(u.grid, coefficients=1j * st.rhs_factor * c)


def step_ifrk4(u: Field, dt: float, params: ProblemParams, config: SolverConfig | None = None) -> Field:
    """One integrating-factor RK4 step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    factor = (config.resolved_dealias_factor(params.p) if config is not None
              else default_dealias_factor(params.p))
    st = _Stepper(u.grid, params.p, params.lam, factor)
    with np.errstate(all="ignore"):
        c = st.step(np.ascontiguousarray(u.coefficients), dt)
    if not np.all(np.isfinite(c)):
        raise NonFiniteStateError(f"non-finite coefficients after a step of {dt:g}")
    return Field(u.grid, coefficients=c)


@dataclass
class Trajectory:
    """Observables recorded every ``sample_interval``; ``states`` may be absent when
    the trajectory was read back from CSV."""

    times: np.ndarray
    M: np.ndarray
    total_density_abs: np.ndarray
    l2: np.ndarray
    lp1: np.ndarray
    sup: np.ndarray
    l1: np.ndarray | None = None
    tail_fraction: np.ndarray | None = None
    states: list[Field] | None = None
    params: ProblemParams | None = None
    sample_interval: float | None = None
    tail_threshold: float = 1e-4

    def __len__(self):
        return len(self.times)

    @property
    def under_resolved(self) -> np.ndarray:
        if self.tail_fraction is None:
            return np.zeros(len(self), dtype=bool)
        return self.tail_fraction > self.tail_threshold

    def resolved_count(self) -> int:
        """Number of leading samples before the first under-resolved one."""
        bad = np.flatnonzero(self.under_resolved)
        return int(bad[0]) if bad.size else len(self)

    def spacing(self) -> float:
        if self.sample_interval is not None:
            return self.sample_interval
        if len(self) < 2:
            raise ValueError("cannot infer the sample spacing from fewer than two samples")
        return float(self.times[1] - self.times[0])


@dataclass
class BlowupReport:
    detected: bool
    t_detected: float | None
    trigger: Trigger
    bound_T0: float | None
    verdict: Verdict
    p: float = 3.0
    lam: complex = 1.0
    alpha: complex = 1.0
    alpha_source: str = "chosen"
    condition_i: bool = False
    n: int = 0
    t_final: float = 0.0
    first_under_resolved_time: float | None = None
    steps_accepted: int = 0
    steps_rejected: int = 0
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["trigger"] = self.trigger.value
        d["verdict"] = self.verdict.value
        d["lambda"] = [self.lam.real, self.lam.imag]
        d["alpha"] = [complex(self.alpha).real, complex(self.alpha).imag]
        del d["lam"]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    @classmethod
    def from_dict(cls, d: dict) -> BlowupReport:
        d = dict(d)
        lam = d.pop("lambda")
        alpha = d.pop("alpha")
        return cls(lam=complex(*lam), alpha=complex(*alpha),
                   trigger=Trigger(d.pop("trigger")), verdict=Verdict(d.pop("verdict")), **d)

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.p, self.lam, self.alpha)


def verdict_for(detected: bool, t_detected, bound_T0) -> Verdict:
    if bound_T0 is None:
        return Verdict.NO_BLOWUP_EXPECTED
    if not detected:
        return Verdict.INCONCLUSIVE
    if t_detected > bound_T0 * (1.0 + VERDICT_SLACK):
        return Verdict.BOUND_VIOLATED
    return Verdict.CONSISTENT


class _Recorder:
    def __init__(self, grid, p, alpha, keep_states):
        self.grid = grid
        self.p = p
        self.alpha = complex(alpha)
        self.keep_states = keep_states
        self.rows = []
        self.states = [] if keep_states else None

    def record(self, t, c):
        u = Field(self.grid, coefficients=c)
        l2 = norm(u, 2.0)
        td = abs(TWO_PI * c[0])
        if td > max(DENSITY_RTOL * l2, 1e-300):
            raise TotalDensityError(
                f"total density {td:.3e} exceeds {DENSITY_RTOL:g} * L2 = {DENSITY_RTOL * l2:.3e} "
                f"at t = {t:.17g}; the blowup functional is undefined")
        pairing = TWO_PI * kernels.inverse_k_energy(c, self.grid.wavenumbers)
        m_val = (self.alpha * 1j * pairing).imag
        self.rows.append((t, m_val, td, l2, norm(u, self.p + 1.0), norm(u, math.inf),
                          norm(u, 1.0), tail_fraction(u)))
        if self.keep_states:
            self.states.append(u)

    def trajectory(self, params, config):
        a = np.array(self.rows, dtype=float).reshape(-1, 8)
        return Trajectory(times=a[:, 0], M=a[:, 1], total_density_abs=a[:, 2], l2=a[:, 3],
                          lp1=a[:, 4], sup=a[:, 5], l1=a[:, 6], tail_fraction=a[:, 7],
                          states=self.states, params=params,
                          sample_interval=config.sample_interval,
                          tail_threshold=config.tail_threshold)


def _relative_discrepancy(a, b):
    scale = math.sqrt(float(np.vdot(b, b).real))
    diff = math.sqrt(float(np.vdot(a - b, a - b).real))
    if scale == 0.0:
        return diff
    return diff / scale


def integrate(u0: Field, params: ProblemParams, config: SolverConfig,
              keep_states: bool = True, backend=None) -> tuple[Trajectory, BlowupReport]:
    """Evolve ``u0`` until blowup is detected or ``t_max`` is reached.

    The multiplier used for M is ``params.alpha`` when given, else
    :func:`choose_alpha`, else 1 (tracking only; recorded as ``"default"``).
    """
    if params.lam == 0:
        raise ValueError("lambda must be nonzero")
    if not u0.is_zero_mean():
        raise ValueError(
            f"initial data must have zero mean (|c_0| = {abs(u0.coefficients[0]):.3e})")
    if not u0.is_finite():
        raise ValueError("initial data contains non-finite values")

    cond = check_condition_i(u0, params.lam)
    if params.alpha is not None:
        alpha, source = params.alpha, "user"
    else:
        chosen = choose_alpha(u0, params.lam)
        alpha, source = (chosen, "chosen") if chosen is not None else (1.0, "default")
    used = params.with_alpha(alpha)
    bound = lifespan_bound(u0, params.p, params.lam) if cond else None

    grid = u0.grid
    st = _Stepper(grid, params.p, params.lam, config.resolved_dealias_factor(params.p), backend)
    rec = _Recorder(grid, params.p, alpha, keep_states)
    h = config.sample_interval
    tol = config.step_tolerance

    c = np.ascontiguousarray(u0.coefficients, dtype=np.complex128)
    t = 0.0
    rec.record(t, c)
    j = 1
    dt = config.dt_init
    accepted = rejected = 0
    trigger = Trigger.T_MAX_REACHED
    last_nonfinite = False

    with np.errstate(all="ignore"):
        while True:
            target = min(j * h, config.t_max)
            if t >= config.t_max * (1.0 - 1e-14):
                break
            remaining = target - t
            # snap onto the sample time rather than missing it by roundoff
            lands = dt >= remaining * (1.0 - 1e-9)
            step = remaining if lands else dt
            k1 = st.rhs(c)
            big = st.step(c, step, k1)
            half = st.step(c, 0.5 * step, k1)
            fine = st.step(half, 0.5 * step)
            finite = bool(np.all(np.isfinite(fine)) and np.all(np.isfinite(big)))
            err = _relative_discrepancy(big, fine) if finite else math.inf
            if not err <= tol:
                rejected += 1
                last_nonfinite = not finite
                dt = 0.5 * step
                if dt < config.dt_min:
                    trigger = Trigger.NONFINITE_VALUE if last_nonfinite else Trigger.DT_FLOOR
                    break
                continue
            sup = float(np.max(np.abs(np.fft.ifft(fine)))) * grid.n
            if sup > config.blowup_sup_threshold:
                trigger = Trigger.SUP_THRESHOLD
                break
            accepted += 1
            c = fine
            t = target if lands else t + step
            if err < tol / 64.0:
                dt = min(2.0 * dt, h)
            if t == j * h:
                rec.record(t, c)
                j += 1

    traj = rec.trajectory(used, config)
    detected = trigger is not Trigger.T_MAX_REACHED
    t_det = t if detected else None
    ur = np.flatnonzero(traj.under_resolved)
    report = BlowupReport(
        detected=detected, t_detected=t_det, trigger=trigger, bound_T0=bound,
        verdict=verdict_for(detected, t_det, bound),
        p=params.p, lam=params.lam, alpha=complex(alpha), alpha_source=source,
        condition_i=cond, n=grid.n, t_final=t,
        first_under_resolved_time=float(traj.times[ur[0]]) if ur.size else None,
        steps_accepted=accepted, steps_rejected=rejected,
    )
    return traj, report


@dataclass
class GaugeTrajectory:
    """The gauge-transformed field w on [0, 2pi) at each sample time."""

    times: np.ndarray
    w: list[np.ndarray]
    dw: list[np.ndarray]
    energy: np.ndarray
    modulus_error: np.ndarray
    periodicity_mismatch: np.ndarray
    grid: TorusGrid

    def field(self, i) -> Field:
        return Field(self.grid, samples=self.w[i])


def density_primitive(u: Field) -> np.ndarray:
    """int_0^x |u|^2 dy at the grid points, including the secular mean * x term.

    |u|^2 is formed on a doubled grid, where it is resolved exactly.
    """
    fine = u.resample(2 * u.grid.n)
    dens = Field(fine.grid, samples=np.abs(fine.samples) ** 2)
    mean = dens.coefficients[0].real
    osc = Field(fine.grid, coefficients=np.where(fine.grid.wavenumbers == 0, 0.0,
                                                 dens.coefficients))
    return (antiderivative_from_zero(osc).samples[::2].real + mean * u.grid.points)


def gauge_transform_trajectory(traj: Trajectory) -> GaugeTrajectory:
    """w = u exp(i/2 int_0^x |u|^2 dy - i/2 int_0^t [Im(conj(u) u_x) + 4|u|^4](t', 0) dt').

    Only defined for p = 3, lam = -i. The time integral uses the trapezoid
    rule over the recorded samples. ``periodicity_mismatch`` is
    |exp(i/2 ||u||_2^2) - 1|, the jump of the spatial phase across x = 2pi.
    """
    params = traj.params
    if params is None or params.p != 3.0 or params.lam != complex(0.0, -1.0):
        raise ValueError("gauge transform is defined only for p = 3 and lambda = -i")
    if traj.states is None:
        raise ValueError("gauge transform needs recorded states")
    grid = traj.states[0].grid
    boundary = np.empty(len(traj))
    for i, u in enumerate(traj.states):
        u0 = complex(u.samples[0])
        ux0 = complex(derivative(u).samples[0])
        boundary[i] = (np.conj(u0) * ux0).imag + 4.0 * abs(u0) ** 4
    theta = np.zeros(len(traj))
    if len(traj) > 1:
        theta[1:] = np.cumsum(0.5 * (boundary[1:] + boundary[:-1]) * np.diff(traj.times))

    ws, dws, energy, modulus, mismatch = [], [], [], [], []
    for i, u in enumerate(traj.states):
        phi = density_primitive(u)
        phase = np.exp(0.5j * phi - 0.5j * theta[i])
        us = u.samples
        w = us * phase
        dw = (derivative(u).samples + 0.5j * np.abs(us) ** 2 * us) * phase
        ws.append(w)
        dws.append(dw)
        energy.append(energy_E2(Field(grid, samples=w), dw))
        scale = max(float(np.max(np.abs(us))), 1e-300)
        modulus.append(float(np.max(np.abs(np.abs(w) - np.abs(us)))) / scale)
        total = norm(u, 2.0) ** 2
        mismatch.append(abs(np.exp(0.5j * total) - 1.0))
    return GaugeTrajectory(times=traj.times.copy(), w=ws, dw=dws, energy=np.array(energy),
                           modulus_error=np.array(modulus),
                           periodicity_mismatch=np.array(mismatch), grid=grid)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV with the fixed leading columns; ``l1`` and ``tail_fraction`` follow."""
    cols = [traj.times, traj.M, traj.total_density_abs, traj.l2, traj.lp1, traj.sup]
    header = list(TRAJECTORY_COLUMNS)
    if traj.l1 is not None and traj.tail_fraction is not None:
        cols += [traj.l1, traj.tail_fraction]
        header += list(EXTRA_COLUMNS)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trajectory_csv(path, params: ProblemParams | None = None,
                        sample_interval: float | None = None) -> Trajectory:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty trajectory file") from None
        missing = [c for c in TRAJECTORY_COLUMNS if c not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {', '.join(missing)}")
        rows = [[float(v) for v in r] for r in reader if r]
    if not rows:
        raise ValueError(f"{path}: no samples")
    a = np.array(rows, dtype=float)
    col = {name: a[:, i] for i, name in enumerate(header)}
    return Trajectory(times=col["t"], M=col["M"], total_density_abs=col["total_density_abs"],
                      l2=col["l2"], lp1=col["lp1"], sup=col["sup"], l1=col.get("l1"),
                      tail_fraction=col.get("tail_fraction"), params=params,
                      sample_interval=sample_interval)
