"""Two-mesh convergence studies, timing comparisons and the command line.

Errors follow the two-mesh principle: without an exact solution, a run is
compared with a run on a halved step (temporal) or halved mesh width
(spatial) at coincident levels or nodes.  A row labelled ``N`` (or
``M_H, M_h``) reports the comparison between the run at half that
resolution and the run at the labelled resolution, and its CPU time is that
of the labelled run.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, NumericalError, StgWaveError, UsageError
from .exponent import _kernel_table_cached, build_kernel_table
from .mesh import unit_square
from .stepper import example_problem, run_standard, run_stg

__all__ = [
    "CSV_COLUMNS",
    "StudyConfig",
    "Trajectory",
    "temporal_error",
    "spatial_error",
    "two_mesh_temporal",
    "two_mesh_spatial",
    "bench_compare",
    "write_rows",
    "selftest",
    "run_cli",
    "main",
]

CSV_COLUMNS = ("scheme", "case", "alpha0", "N", "M_H", "M_h", "error", "rate",
               "cpu_seconds", "phase_coarse_s", "phase_fine_s")
TIMING_COLUMNS = ("cpu_seconds", "phase_coarse_s", "phase_fine_s")
WORKERS_ENV = "STGWAVE_WORKERS"


def _tuple(v, cast):
    if v is None:
        return None
    if isinstance(v, str):
        v = [p for p in v.replace(" ", "").split(",") if p]
    if not isinstance(v, (list, tuple)):
        v = [v]
    return tuple(cast(p) for p in v)


@dataclass
class StudyConfig:
    """Parameters of a study.

    ``M_H`` and ``M_h`` are lists: a temporal study uses their first entries,
    a spatial study iterates over them.  For the two-grid scheme ``M_h`` may
    be omitted and is then ``J * M_H``.
    """

    scheme: str = "stg"
    case: str = "I"
    alpha0: tuple = (1.5,)
    N: tuple = (128, 256, 512)
    M_H: tuple = (8,)
    J: int | None = None
    M_h: tuple | None = None
    T: float = 1.0
    poly_coeff: float = 1.0 / 11.0
    include_setup: bool = False
    with_error: bool = True
    output: str | None = None
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        self.alpha0 = _tuple(self.alpha0, float)
        self.N = _tuple(self.N, int)
        self.M_H = _tuple(self.M_H, int)
        self.M_h = _tuple(self.M_h, int)
        if self.scheme not in ("stg", "nonlinear"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.case not in ("I", "II", "zero"):
            raise ConfigurationError(f"unknown case {self.case!r}")
        if self.T != 1.0:
            raise ConfigurationError("the built-in problem is posed on T = 1")
        if self.M_h is None:
            if self.J is None or self.M_H is None:
                raise ConfigurationError("give M_h, or M_H together with J")
            self.M_h = tuple(self.J * m for m in self.M_H)
        if self.scheme == "stg":
            if self.M_H is None or len(self.M_H) != len(self.M_h):
                raise ConfigurationError("two-grid studies need one M_H per M_h")
            for mH, mh in zip(self.M_H, self.M_h):
                if mh % mH or mh // mH < 2:
                    raise ConfigurationError(
                        f"M_h={mh} is not an integer multiple >= 2 of M_H={mH}")
                if self.J is not None and mh != self.J * mH:
                    raise ConfigurationError(f"M_h={mh} != J*M_H={self.J * mH}")
        for a in self.alpha0:
            example_problem(a, self.case, self.poly_coeff)  # validates alpha

    def problem(self, alpha0):
        return example_problem(alpha0, self.case, self.poly_coeff)


@dataclass
class Trajectory:
    """Interior levels of one run plus its timings."""

    scheme: str
    M_H: int | None
    M_h: int
    N: int
    levels: np.ndarray
    cpu: float
    phases: tuple = (None, None)

    @property
    def h(self):
        return 1.0 / self.M_h


def _solve(config, alpha0, N, M_H, M_h):
    problem = config.problem(alpha0)
    setup = 0.0
    if config.include_setup:
        _kernel_table_cached.cache_clear()
        start = time.perf_counter()
        build_kernel_table(problem.schedule, problem.T, N)
        setup = time.perf_counter() - start
    if config.scheme == "stg":
        _, fine = run_stg(problem, M_H, M_h // M_H, N)
        t = fine.timings
        return Trajectory("stg", M_H, M_h, N, fine.levels, setup + t["stepping"],
                          (t["coarse"], t["fine"]))
    run = run_standard(problem, unit_square(M_h), N)
    return Trajectory("nonlinear", None, M_h, N, run.levels,
                      setup + run.timings["stepping"])


def temporal_error(coarse, fine):
    """``max_n || U^n(tau) - U^{2n}(tau/2) ||_h`` over ``0 <= n <= N``."""
    if coarse.M_h != fine.M_h or fine.N != 2 * coarse.N:
        raise UsageError("temporal comparison needs equal grids and N, 2N steps")
    diff = coarse.levels - fine.levels[::2]
    return float(np.sqrt(coarse.h**2 * np.max(np.sum(diff * diff, axis=1))))


def spatial_error(coarse, fine):
    """Final-level difference at the coarse run's interior nodes."""
    if fine.M_h != 2 * coarse.M_h or fine.N != coarse.N:
        raise UsageError("spatial comparison needs grids M, 2M and equal N")
    m, mf = coarse.M_h - 1, fine.M_h - 1
    a = coarse.levels[-1].reshape(m, m)
    b = fine.levels[-1].reshape(mf, mf)[1::2, 1::2]
    return float(coarse.h * np.sqrt(np.sum((a - b) ** 2)))


def _rate(prev, cur, ratio):
    if prev is None or not (prev > 0 and cur > 0):
        return None
    return math.log(prev / cur) / math.log(ratio)


def _row(config, alpha0, traj, error, rate):
    coarse, fine = traj.phases
    return {
        "scheme": traj.scheme, "case": config.case, "alpha0": alpha0,
        "N": traj.N, "M_H": traj.M_H, "M_h": traj.M_h,
        "error": error, "rate": rate, "cpu_seconds": traj.cpu,
        "phase_coarse_s": coarse, "phase_fine_s": fine,
    }


def _temporal_one(config, alpha0):
    M_H = config.M_H[0] if config.scheme == "stg" else None
    M_h = config.M_h[0]
    rows = []
    prev_run, prev_err, prev_N = None, None, None
    for N in config.N:
        if N % 2 or N < 4:
            raise ConfigurationError(f"temporal rows need even N >= 4, got {N}")
        half = prev_run if prev_run is not None and prev_run.N == N // 2 else \
            _solve(config, alpha0, N // 2, M_H, M_h)
        run = _solve(config, alpha0, N, M_H, M_h)
        err = temporal_error(half, run)
        rate = _rate(prev_err, err, N / prev_N) if prev_N else None
        rows.append(_row(config, alpha0, run, err, rate))
        prev_run, prev_err, prev_N = run, err, N
    return rows


def _spatial_one(config, alpha0):
    N = config.N[0]
    rows = []
    prev_run, prev_err, prev_M = None, None, None
    M_H_list = config.M_H if config.scheme == "stg" else (None,) * len(config.M_h)
    for M_H, M_h in zip(M_H_list, config.M_h):
        if M_h % 2 or (M_H is not None and M_H % 2):
            raise ConfigurationError("spatial rows need even mesh counts")
        hH = None if M_H is None else M_H // 2
        if prev_run is not None and prev_run.M_h == M_h // 2 and prev_run.M_H == hH:
            half = prev_run
        else:
            half = _solve(config, alpha0, N, hH, M_h // 2)
        run = _solve(config, alpha0, N, M_H, M_h)
        err = spatial_error(half, run)
        rate = _rate(prev_err, err, M_h / prev_M) if prev_M else None
        rows.append(_row(config, alpha0, run, err, rate))
        prev_run, prev_err, prev_M = run, err, M_h
    return rows


def _workers(config):
    if config.workers is not None:
        return max(1, int(config.workers))
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigurationError(f"{WORKERS_ENV} must be an integer") from None


def _per_alpha(config, func):
    n = min(_workers(config), len(config.alpha0))
    if n <= 1:
        parts = [func(config, a) for a in config.alpha0]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            parts = list(pool.map(func, [config] * len(config.alpha0), config.alpha0))
    return [row for part in parts for row in part]


def two_mesh_temporal(config):
    """Rows ``(N, E, rate, cpu)`` for every alpha0 and N of ``config``."""
    return _per_alpha(config, _temporal_one)


def two_mesh_spatial(config):
    """Rows ``(M_H, M_h, S, rate, cpu)`` at the single N of ``config``."""
    return _per_alpha(config, _spatial_one)


def _bench_one(config, alpha0):
    rows = []
    for N in config.N:
        for scheme in ("stg", "nonlinear"):
            cfg = replace(config, scheme=scheme) if scheme != config.scheme else config
            M_H = cfg.M_H[0] if scheme == "stg" else None
            run = _solve(cfg, alpha0, N, M_H, cfg.M_h[0])
            err = None
            if config.with_error:
                half = _solve(cfg, alpha0, N // 2, M_H, cfg.M_h[0])
                err = temporal_error(half, run)
            rows.append(_row(cfg, alpha0, run, err, None))
    return rows


def bench_compare(config):
    """Paired two-grid / nonlinear rows on identical parameters (reporting only)."""
    if config.M_H is None:
        raise ConfigurationError("bench needs M_H for the two-grid scheme")
    return _per_alpha(config, _bench_one)


def _fmt(key, v):
    if v is None:
        return ""
    if key in ("N", "M_H", "M_h"):
        return str(int(v))
    if key in ("error", "alpha0"):
        return repr(float(v))
    if key == "rate":
        return f"{v:.4f}"
    if key in TIMING_COLUMNS:
        return f"{v:.3f}"
    return str(v)


def write_rows(rows, stream):
    """Emit rows in the fixed CSV schema; empty cells mark missing values."""
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(k, row.get(k)) for k in CSV_COLUMNS])


# -- self test ----------------------------------------------------------------

def selftest(seed=0, quick=True):
    """Cheap property checks; returns ``[(name, passed, detail), ...]``."""
    from scipy import integrate

    from .mesh import (GridFunction, apply_compact_A, apply_lambda, inner_product,
                       norm_A, norm_inf, norm_l2)
    from .piweights import averaged_pi_energy, lambda_weight
    from .spline import prolongate_bicubic

    rng = np.random.default_rng(seed)
    out = []

    worst = 0.0
    for abar in (0.2, 0.5, 0.9):
        tau = 0.1
        for n in range(1, 7 if quick else 21):
            for j in range(1, n + 1):
                def inner(t, abar=abar, j=j):
                    hi = min(t, j * tau)
                    return ((t - (j - 1) * tau) ** abar - (t - hi) ** abar) / math.gamma(abar + 1)
                ref = integrate.quad(inner, (n - 1) * tau, n * tau, epsabs=1e-14,
                                     epsrel=1e-14, limit=200)[0] / tau
                worst = max(worst, abs(lambda_weight(abar, tau, n, j) - ref))
    out.append(("weight oracle", worst <= 1e-11, f"max abs diff {worst:.2e}"))

    low = min(averaged_pi_energy(rng.uniform(-1, 1, rng.integers(1, 33)),
                                 rng.uniform(0.05, 0.95), 1.0 / 32)
              for _ in range(50 if quick else 200))
    out.append(("PI positivity", low >= -1e-12, f"min form {low:.2e}"))

    grid = unit_square(15)
    bad = 0
    for _ in range(50 if quick else 500):
        v = np.zeros(grid.shape)
        v[1:-1, 1:-1] = rng.standard_normal(grid.interior_shape)
        u = GridFunction(grid, v, True)
        n2, a2 = norm_l2(u) ** 2, norm_A(u) ** 2
        Au = apply_compact_A(u)
        ok = (n2 / 3 - 1e-12 <= a2 <= n2 + 1e-12
              and norm_l2(Au) <= norm_l2(u) + 1e-12
              and norm_inf(Au) <= norm_inf(u) + 1e-12
              and -inner_product(apply_lambda(u), u) >= -1e-12 * n2)
        bad += not ok
    out.append(("norm and operator properties", bad == 0, f"{bad} violations"))

    coarse, fine = unit_square(8), unit_square(32)
    ratio = 0.0
    for _ in range(50 if quick else 500):
        v = np.zeros(coarse.shape)
        v[1:-1, 1:-1] = rng.standard_normal(coarse.interior_shape)
        U = GridFunction(coarse, v, True)
        ratio = max(ratio, norm_l2(prolongate_bicubic(U, fine)) / norm_l2(U))
    out.append(("spline norm bound", ratio <= 48, f"max ratio {ratio:.3f}"))
    return out


# -- command line ---------------------------------------------------------------

class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgumentError(message)


def _common(p):
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--scheme", choices=("stg", "nonlinear"))
    p.add_argument("--case", choices=("I", "II", "zero"))
    p.add_argument("--alpha0", help="comma separated list")
    p.add_argument("--N", help="comma separated list")
    p.add_argument("--MH", dest="M_H", help="coarse interval counts")
    p.add_argument("--Mh", dest="M_h", help="fine interval counts")
    p.add_argument("--J", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--include-setup", action="store_true", default=None,
                   help="time the kernel-table construction too")
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", "-o", help="CSV path (default: stdout)")


def _build_parser():
    parser = _Parser(prog="stgwave", description=(
        "Two-grid compact difference solver for the variable-exponent "
        "nonlinear diffusion-wave equation."))
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="run one scheme and report its final state")
    _common(p)
    p.add_argument("--dump-final", help="write the final level as grid CSV")
    for name, text in (("converge-time", "temporal two-mesh study"),
                       ("converge-space", "spatial two-mesh study"),
                       ("bench", "paired two-grid / nonlinear timings")):
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "bench":
            p.add_argument("--no-error", dest="with_error", action="store_false",
                           default=None, help="skip the half-step companion runs")
    p = sub.add_parser("selftest", help="property checks of the building blocks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true")
    for sp_ in sub.choices.values():
        sp_.error = parser.error
    return parser


_CONFIG_KEYS = {f.name for f in StudyConfig.__dataclass_fields__.values()}


def _read_config(path):
    text = open(path).read()
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    cp.read_string("[study]\n" + text)
    out = {}
    for key, value in cp["study"].items():
        k = key.replace("-", "_")
        k = {"MH": "M_H", "Mh": "M_h"}.get(k, k)
        if k not in _CONFIG_KEYS:
            raise ConfigurationError(f"unknown config key {key!r}")
        if k in ("include_setup", "with_error"):
            value = value.strip().lower() in ("1", "true", "yes", "on")
        out[k] = value
    return out


def _config_from_args(args, defaults=None):
    values = dict(defaults or {})
    if getattr(args, "config", None):
        values.update(_read_config(args.config))
    for k in _CONFIG_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    for k in ("J", "seed", "workers"):
        if k in values and values[k] is not None:
            values[k] = int(values[k])
    if "T" in values:
        values["T"] = float(values["T"])
    if values.get("scheme", "stg") == "nonlinear" and "M_h" in values:
        values.setdefault("M_H", None)
    return StudyConfig(**values)


def _emit(rows, config, stdout):
    if config.output:
        with open(config.output, "w", newline="") as fh:
            write_rows(rows, fh)
    else:
        write_rows(rows, stdout)


def run_cli(argv=None, stdout=None, stderr=None):
    """Entry point; returns 0 on success, 1 on usage/config errors, 2 on numerical failure."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "selftest":
            results = selftest(args.seed, quick=not args.full)
            for name, ok, detail in results:
                print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}", file=stdout)
            return 0 if all(ok for _, ok, _ in results) else 2
        if args.command == "solve":
            config = _config_from_args(args, {"N": (64,)})
            return _solve_command(config, args, stdout)
        if args.command == "converge-time":
            config = _config_from_args(args)
            _emit(two_mesh_temporal(config), config, stdout)
        elif args.command == "converge-space":
            config = _config_from_args(args, {"N": (256,), "J": 4, "M_H": (4, 8, 16)})
            _emit(two_mesh_spatial(config), config, stdout)
        elif args.command == "bench":
            config = _config_from_args(args)
            _emit(bench_compare(config), config, stdout)
        return 0
    except _ArgumentError as exc:
        print(parser.format_usage().rstrip(), file=stderr)
        print(f"stgwave: error: {exc}", file=stderr)
        return 1
    except (ConfigurationError, UsageError, OSError) as exc:
        print(f"stgwave: configuration error: {exc}", file=stderr)
        return 1
    except NumericalError as exc:
        print(f"stgwave: numerical failure: {exc}", file=stderr)
        return 2
    except StgWaveError as exc:
        print(f"stgwave: error: {exc}", file=stderr)
        return 2


def _solve_command(config, args, stdout):
    N = config.N[0]
    M_H = config.M_H[0] if config.scheme == "stg" else None
    traj = _solve(config, config.alpha0[0], N, M_H, config.M_h[0])
    if args.dump_final:
        from .mesh import GridFunction, write_csv
        write_csv(GridFunction.from_interior(unit_square(traj.M_h), traj.levels[-1]),
                  args.dump_final)
    row = _row(config, config.alpha0[0], traj, None, None)
    _emit([row], config, stdout)
    return 0


def main():
    sys.exit(run_cli())
