"""Command-line front end: ``dnls run | sweep | plotdata | verify``.

Run specs are JSON. Complex numbers are written as ``[re, im]`` pairs::

    {
      "initial_data": {"mode": {"k": 1, "amplitude": [1, 0]}},
      "params": {"p": 3, "lambda": [1, 0]},
      "solver": {"n": 256, "dt_init": 1e-3, "dt_min": 1e-12, "t_max": 25,
                 "sample_interval": 1e-3, "step_tolerance": 1e-8},
      "outputs": "out"
    }

Every section is optional; the defaults reproduce the headline case
(k = 1, A = 1, lambda = 1, p = 3, n = 256).

Exit status: 0 when every applicable check passes, 1 when a check fails,
2 for invalid input.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .field import Field, TorusGrid, random_zero_mean
from .functionals import ProblemParams, ode_lower_bound, ode_singular_time, pairing_integral
from .solver import (
    BlowupReport,
    SolverConfig,
    TotalDensityError,
    integrate,
    read_trajectory_csv,
    write_trajectory_csv,
)
from .verify import check_lifespan, checks_to_json, run_checks

EXIT_OK, EXIT_FAIL, EXIT_INVALID = 0, 1, 2

DEFAULT_SOLVER = {
    "n": 256,
    "dt_init": 1e-3,
    "dt_min": 1e-12,
    "t_max": 25.0,
    "sample_interval": 1e-3,
    "step_tolerance": 1e-8,
    "blowup_sup_threshold": 1e8,
    "dealias_factor": None,
}
SOLVER_KEYS = set(DEFAULT_SOLVER) | {"tail_threshold"}


class SpecError(ValueError):
    def __init__(self, message, key=None, line=None):
        super().__init__(message)
        self.key = key
        self.line = line


@dataclass
class RunSpec:
    initial_data: dict
    params: ProblemParams
    solver: SolverConfig
    n: int
    outputs: str = "out"
    alpha_user: bool = False
    raw: dict = field(default_factory=dict)

    def initial_field(self, scale: float = 1.0) -> Field:
        grid = TorusGrid(self.n)
        (kind, body), = self.initial_data.items()
        if kind == "mode":
            u = Field.mode(grid, body["k"], body["amplitude"])
        elif kind == "coefficients":
            u = Field.from_dict({"n": self.n, "coefficients": body})
        else:
            u = random_zero_mean(grid, body["seed"], body["n_modes"], body.get("decay", 1.0))
        return u if scale == 1.0 else scale * u


def _complex(value, key):
    if isinstance(value, bool):
        raise SpecError(f"{key}: expected a number or [re, im]", key)
    if isinstance(value, (int, float)):
        return complex(value)
    if (isinstance(value, list) and len(value) == 2
            and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)):
        return complex(value[0], value[1])
    raise SpecError(f"{key}: expected a number or [re, im], got {value!r}", key)


def _number(value, key):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SpecError(f"{key}: expected a number, got {value!r}", key)
    return value


def _parse_initial(data, n):
    if not isinstance(data, dict) or len(data) != 1:
        raise SpecError("initial_data: exactly one of mode, coefficients, random is required",
                        "initial_data")
    (kind, body), = data.items()
    if kind == "mode":
        if not isinstance(body, dict):
            raise SpecError("mode: expected an object with k and amplitude", "mode")
        k = body.get("k", 1)
        if isinstance(k, bool) or not isinstance(k, int) or not -n // 2 <= k < n // 2:
            raise SpecError(f"k: expected an integer wavenumber in [-{n // 2}, {n // 2}), got {k!r}",
                            "k")
        return {"mode": {"k": k, "amplitude": _complex(body.get("amplitude", 1.0), "amplitude")}}
    if kind == "coefficients":
        if not isinstance(body, list) or not body:
            raise SpecError("coefficients: expected a non-empty list of [k, re, im]", "coefficients")
        rows = []
        for row in body:
            if not (isinstance(row, list) and len(row) == 3 and isinstance(row[0], int)):
                raise SpecError(f"coefficients: bad entry {row!r}", "coefficients")
            if not -n // 2 <= row[0] < n // 2:
                raise SpecError(f"coefficients: wavenumber {row[0]} outside the grid band",
                                "coefficients")
            rows.append([row[0], float(_number(row[1], "coefficients")),
                         float(_number(row[2], "coefficients"))])
        return {"coefficients": rows}
    if kind == "random":
        if not isinstance(body, dict):
            raise SpecError("random: expected an object", "random")
        seed = body.get("seed", 0)
        env = os.environ.get("DNLS_SEED")
        if env is not None:
            try:
                seed = int(env)
            except ValueError:
                raise SpecError(f"DNLS_SEED must be an integer, got {env!r}") from None
        n_modes = body.get("n_modes", 10)
        if not isinstance(seed, int) or not isinstance(n_modes, int) or not 0 < n_modes < n // 2:
            raise SpecError("random: seed and n_modes must be integers with 0 < n_modes < n/2",
                            "random")
        decay = _number(body.get("decay", 1.0), "decay")
        if not decay > 0:
            raise SpecError("decay: must be positive", "decay")
        return {"random": {"seed": seed, "n_modes": n_modes, "decay": float(decay)}}
    raise SpecError(f"initial_data: unknown variant {kind!r}", kind)


def parse_run_spec(data) -> RunSpec:
    if not isinstance(data, dict):
        raise SpecError("spec must be a JSON object")
    unknown = set(data) - {"initial_data", "params", "solver", "outputs"}
    if unknown:
        key = sorted(unknown)[0]
        raise SpecError(f"unknown top-level key {key!r}", key)

    solver = dict(DEFAULT_SOLVER)
    given = data.get("solver", {})
    if not isinstance(given, dict):
        raise SpecError("solver: expected an object", "solver")
    for key, value in given.items():
        if key not in SOLVER_KEYS:
            raise SpecError(f"solver: unknown key {key!r}", key)
        if value is not None:
            _number(value, key)
        solver[key] = value
    n = solver.pop("n")
    if not isinstance(n, int) or n < 8 or n % 2:
        raise SpecError(f"n: expected an even integer >= 8, got {n!r}", "n")
    try:
        config = SolverConfig(**solver)
    except ValueError as exc:
        raise SpecError(f"solver: {exc}", "solver") from None

    params_in = data.get("params", {})
    if not isinstance(params_in, dict):
        raise SpecError("params: expected an object", "params")
    p = _number(params_in.get("p", 3.0), "p")
    if not p > 1:
        raise SpecError(f"p: must exceed 1, got {p!r}", "p")
    lam = _complex(params_in.get("lambda", 1.0), "lambda")
    if lam == 0:
        raise SpecError("lambda: must be nonzero", "lambda")
    alpha = params_in.get("alpha")
    alpha = None if alpha is None else _complex(alpha, "alpha")

    initial = _parse_initial(data.get("initial_data", {"mode": {"k": 1, "amplitude": 1.0}}), n)
    outputs = data.get("outputs", "out")
    if not isinstance(outputs, str):
        raise SpecError("outputs: expected a directory path", "outputs")
    return RunSpec(initial, ProblemParams(p, lam, alpha), config, n, outputs,
                   alpha_user=alpha is not None, raw=data)


def _line_of(text, key):
    if key is None:
        return 1
    needle = f'"{key}"'
    for i, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return i
    return 1


def load_run_spec(path) -> RunSpec:
    """Read and validate a spec file; errors carry ``path:line:`` anchors."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise SpecError(f"{path}:0: cannot read spec: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from None
    try:
        return parse_run_spec(data)
    except SpecError as exc:
        raise SpecError(f"{path}:{_line_of(text, exc.key)}: {exc}") from None


def _atomic_write(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_csv(traj, path):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    os.close(fd)
    try:
        write_trajectory_csv(traj, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def execute(spec: RunSpec, out_dir: str, scale: float = 1.0, keep_states: bool = True):
    """Run one spec and write trajectory.csv, report.json, verify.json into ``out_dir``."""
    u0 = spec.initial_field(scale)
    traj, report = integrate(u0, spec.params, spec.solver, keep_states=keep_states)
    report.diagnostics["alpha_user_supplied"] = spec.alpha_user
    report.diagnostics["sample_interval"] = spec.solver.sample_interval
    report.diagnostics["pairing_integral_abs"] = abs(pairing_integral(u0))
    checks = run_checks(traj, traj.params, report)
    _atomic_csv(traj, os.path.join(out_dir, "trajectory.csv"))
    _atomic_write(os.path.join(out_dir, "report.json"), report.to_json() + "\n")
    _atomic_write(os.path.join(out_dir, "verify.json"), checks_to_json(checks) + "\n")
    return traj, report, checks


def cmd_run(args) -> int:
    try:
        spec = load_run_spec(args.spec) if args.spec else parse_run_spec({})
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or spec.outputs
    try:
        _, report, checks = execute(spec, out)
    except TotalDensityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    print(f"trigger={report.trigger.value} t_detected={report.t_detected} "
          f"bound_T0={report.bound_T0} verdict={report.verdict.value}")
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def _sweep_task(task):
    raw, amplitude, out_dir = task
    try:
        spec = parse_run_spec(raw)
        _, report, checks = execute(spec, out_dir, scale=amplitude, keep_states=False)
    except Exception as exc:  # noqa: BLE001 - recorded per run, the sweep continues
        return {"A": amplitude, "error": f"{type(exc).__name__}: {exc}"}
    return {
        "A": amplitude,
        "I_abs": report.diagnostics["pairing_integral_abs"],
        "bound_T0": report.bound_T0,
        "t_detected": report.t_detected,
        "consistent": check_lifespan(report).passed and report.verdict.value == "consistent",
        "checks_passed": all(c.passed for c in checks),
        "p": report.p,
    }


def _parse_amplitudes(text):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise SpecError(f"--amplitudes: expected a comma-separated list of numbers, got {text!r}") from None
    if len(values) < 2:
        raise SpecError("--amplitudes: need at least 2 amplitudes")
    if any(not (math.isfinite(v) and v > 0) for v in values):
        raise SpecError("--amplitudes: amplitudes must be positive")
    return values


def amplitude_scaling(rows, p, rtol=1e-10):
    """Check bound_T0(A) * A^(p-1) is the same for every run."""
    vals = [(r["A"], r["bound_T0"]) for r in rows if r.get("bound_T0") is not None]
    if len(vals) < 2:
        return {"applicable": False, "passed": True, "max_violation": 0.0, "tolerance": rtol}
    a_ref, b_ref = vals[0]
    worst = 0.0
    ratios = []
    for a, b in vals:
        predicted = b_ref * (a_ref / a) ** (p - 1.0)
        worst = max(worst, abs(b - predicted) / abs(predicted))
        ratios.append(b / b_ref)
    return {"applicable": True, "passed": worst <= rtol, "max_violation": worst,
            "tolerance": rtol, "ratios": ratios}


def cmd_sweep(args) -> int:
    try:
        if args.spec:
            spec = load_run_spec(args.spec)
        else:
            spec = parse_run_spec({})
        amplitudes = _parse_amplitudes(args.amplitudes)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or spec.outputs
    tasks = [(spec.raw, a, os.path.join(out, f"A_{a!r}")) for a in amplitudes]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_task, tasks))
    else:
        rows = [_sweep_task(t) for t in tasks]

    lines = ["A,I_abs,bound_T0,t_detected,consistent"]
    for r in rows:
        if "error" in r:
            lines.append(f"{r['A']!r},,,,error")
            print(f"A={r['A']!r}: {r['error']}", file=sys.stderr)
            continue
        fmt = lambda v: "" if v is None else f"{v:.17g}"  # noqa: E731
        lines.append(f"{r['A']!r},{fmt(r['I_abs'])},{fmt(r['bound_T0'])},"
                     f"{fmt(r['t_detected'])},{str(r['consistent']).lower()}")
    _atomic_write(os.path.join(out, "sweep.csv"), "\n".join(lines) + "\n")
    scaling = amplitude_scaling([r for r in rows if "error" not in r], spec.params.p)
    _atomic_write(os.path.join(out, "sweep.json"),
                  json.dumps({"runs": rows, "scaling": scaling}, indent=2, sort_keys=True) + "\n")

    status = EXIT_OK
    for r in rows:
        if "error" in r or not r["checks_passed"] or (r["bound_T0"] is not None and not r["consistent"]):
            status = EXIT_FAIL
    if not scaling["passed"]:
        status = EXIT_FAIL
    print(f"{len(rows)} runs, scaling {'ok' if scaling['passed'] else 'FAILED'}"
          f" (max violation {scaling['max_violation']:.2e}), exit {status}")
    return status


def _load_report(path) -> BlowupReport:
    with open(path) as fh:
        return BlowupReport.from_dict(json.load(fh))


def _write_series(path, rows, comment=None):
    body = "" if comment is None else f"# {comment}\n"
    body += "".join(f"{a:.17g} {b:.17g}\n" for a, b in rows)
    _atomic_write(path, body)


def cmd_plotdata(args) -> int:
    try:
        report = _load_report(args.report)
        traj = read_trajectory_csv(args.trajectory)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or os.path.dirname(os.path.abspath(args.trajectory))
    _write_series(os.path.join(out, "M.dat"), zip(traj.times, traj.M))
    _write_series(os.path.join(out, "sup.dat"), zip(traj.times, traj.sup))

    m0 = float(traj.M[0])
    alpha, lam, p = report.alpha, report.lam, report.p
    if m0 > 0 and alpha.real * lam.real > 0:
        t_star = ode_singular_time(m0, p, lam, alpha)
        h = traj.spacing()
        times = [t for t in traj.times if t < t_star]
        j = len(traj.times)
        while j * h < t_star:
            times.append(j * h)
            j += 1
        rows = [(t, ode_lower_bound(m0, t, p, lam, alpha)) for t in times]
        rows = [r for r in rows if math.isfinite(r[1])]
        _write_series(os.path.join(out, "ode_lower_bound.dat"), rows,
                      comment=f"singular time {t_star:.17g}")
    else:
        _write_series(os.path.join(out, "ode_lower_bound.dat"), [],
                      comment="not applicable: needs M(0) > 0 and Re(alpha) Re(lambda) > 0")
    print(f"wrote M.dat, ode_lower_bound.dat, sup.dat to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        report = _load_report(args.report)
        traj = read_trajectory_csv(args.trajectory, params=report.params,
                                   sample_interval=report.diagnostics.get("sample_interval"))
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    try:
        checks = run_checks(traj, report.params, report)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    out = args.out or os.path.dirname(os.path.abspath(args.trajectory))
    _atomic_write(os.path.join(out, "verify.json"), checks_to_json(checks) + "\n")
    for c in checks:
        print(c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dnls", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="integrate one spec and verify it")
    p_run.add_argument("--spec", help="run spec JSON (default: headline preset)")
    p_run.add_argument("--out", help="output directory (overrides the spec)")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a spec template over several amplitudes")
    p_sweep.add_argument("--spec", help="template spec JSON (default: headline preset)")
    p_sweep.add_argument("--amplitudes", required=True, help="comma-separated amplitudes")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p_sweep.add_argument("--out", help="output directory (overrides the spec)")
    p_sweep.set_defaults(func=cmd_sweep)

    p_plot = sub.add_parser("plotdata", help="export two-column series for plotting")
    p_plot.add_argument("--trajectory", required=True, help="trajectory CSV")
    p_plot.add_argument("--report", required=True, help="report JSON of the same run")
    p_plot.add_argument("--out", help="output directory (default: next to the CSV)")
    p_plot.set_defaults(func=cmd_plotdata)

    p_ver = sub.add_parser("verify", help="re-check an archived trajectory")
    p_ver.add_argument("--trajectory", required=True, help="trajectory CSV")
    p_ver.add_argument("--report", required=True, help="report JSON of the same run")
    p_ver.add_argument("--out", help="output directory (default: next to the CSV)")
    p_ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
