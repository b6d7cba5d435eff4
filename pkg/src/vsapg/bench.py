"""Benchmark drivers: sparse recovery and TV-type denoising at desk scale.

Instances are drawn from ``numpy.random.default_rng(seed)`` (PCG64 bit
generator, ziggurat normals). Everything downstream of the seed is
deterministic, so traces replay bit for bit on the same numpy build.
"""

from dataclasses import dataclass
import math
import os

import numpy as np

from .baselines import PalmParams, run_palm, run_pg
from .functions import (CompositeProblem, MCP, PenaltyGrad, PenaltyXY,
                        QuadraticDataFit, QuadraticTether)
from .linops import DenseMap, Gradient2D, Identity
from .report import RunReport, StoppingRule
from .solver import VsaPGParams, run as run_vsapg

__all__ = [
    "GENERATOR",
    "SparseInstance",
    "DenoiseInstance",
    "gen_sparse",
    "sparse_problem",
    "run_sparse_experiment",
    "phantom",
    "make_denoise",
    "denoise_problem",
    "run_denoise_experiment",
    "snr",
    "format_snr",
    "TRACE_HEADER",
    "SUMMARY_HEADER",
    "write_trace_csv",
    "write_summary_csv",
    "dump_instance",
    "load_instance",
]

GENERATOR = "numpy-PCG64-ziggurat"

SPARSITY = 0.03
SPARSE_ALGORITHMS = ("vsapg", "palm", "pg")
DENOISE_ALGORITHMS = ("vsapg", "palm")

TRACE_HEADER = ["k", "objective", "smoothed_objective", "measure", "residual",
                "mu_k", "tau_k", "sigma_k", "time_ms"]
SUMMARY_HEADER = ["experiment", "algorithm", "m", "n", "err", "seed", "iters",
                  "time_ms", "final_residual", "snr_db"]


# sparse recovery

@dataclass(frozen=True)
class SparseInstance:
    C: DenseMap
    b: np.ndarray
    x0: np.ndarray
    omega: np.ndarray
    lambda_reg: float
    seed: int
    noise_var: float = 1e-3

    @property
    def m(self):
        return self.C.output_dim

    @property
    def n(self):
        return self.C.input_dim


def _sparse_draws(m, n, seed, noise_var):
    # draw order is part of the format: C, support, values, noise
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((m, n))
    C /= np.linalg.norm(C, axis=0)
    nnz = round(SPARSITY * n)
    support = rng.choice(n, nnz, replace=False)
    x0 = np.zeros(n)
    x0[support] = rng.standard_normal(nnz)
    omega = math.sqrt(noise_var) * rng.standard_normal(m)
    return C, x0, omega


def gen_sparse(m, n, seed, noise_var=1e-3):
    """Random compressed-sensing instance ``b = C x0 + omega``.

    ``C`` has i.i.d. standard normal entries with unit-norm columns, ``x0``
    has ``round(0.03 n)`` standard normal nonzeros on a uniform random
    support, ``omega ~ N(0, noise_var I)`` and
    ``lambda_reg = 0.01 ||C^T b||_inf``.
    """
    m, n = int(m), int(n)
    if m <= 0 or n <= 0:
        raise ValueError(f"dimensions must be positive, got m={m}, n={n}")
    if n < 34:
        raise ValueError(f"n must be at least 34 so that x0 has a nonzero, got {n}")
    if noise_var < 0:
        raise ValueError(f"noise_var must be nonnegative, got {noise_var}")
    C, x0, omega = _sparse_draws(m, n, seed, noise_var)
    b = C @ x0 + omega
    lam = 0.01 * float(np.max(np.abs(C.T @ b)))
    return SparseInstance(DenseMap(C), b, x0, omega, lam, int(seed), float(noise_var))


def sparse_problem(inst: SparseInstance, xi=0.5, mu_pen=5.0, lambda_reg=None):
    """``0.5||Cx - b||^2 + sum_i r(y_i) + (mu_pen/2)||x - y||^2`` with MCP ``r``."""
    lam = inst.lambda_reg if lambda_reg is None else lambda_reg
    f = QuadraticDataFit(inst.C, inst.b)
    return CompositeProblem.with_identity(f, MCP(lam, xi), PenaltyXY(mu_pen), inst.n)


def run_sparse_experiment(inst: SparseInstance, algorithm, err, maxiter=5000,
                          xi=0.5, mu_pen=5.0, lambda_reg=None, params=None,
                          diagnose=True, stop_kind=None):
    """Solve one sparse-recovery cell from the zero start.

    vsapg and palm solve the split problem and stop on
    ``||x - y|| / max(||x||, ||y||) < err``; pg solves
    ``0.5||Cx - b||^2 + sum_i r(x_i)`` and stops on the relative change of
    successive iterates. `stop_kind` overrides the rule for vsapg/palm
    (e.g. ``"successive_change"`` on ``x`` to match pg's). `params` is a
    :class:`VsaPGParams`, a :class:`PalmParams`, or the pg step constant
    ``c`` (``None`` is ``||C||^2``).
    """
    if algorithm not in SPARSE_ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of "
                         f"{SPARSE_ALGORITHMS}")
    cfg = {"experiment": "sparse", "m": inst.m, "n": inst.n, "seed": inst.seed,
           "generator": GENERATOR, "noise_var": inst.noise_var, "xi": xi,
           "lambda_reg": inst.lambda_reg if lambda_reg is None else lambda_reg}
    if algorithm == "pg":
        prob = sparse_problem(inst, xi, mu_pen, lambda_reg)
        stop = StoppingRule("successive_change", err, maxiter)
        return run_pg(prob.f, prob.g, params, stop=stop, config=cfg)
    cfg["mu_pen"] = mu_pen
    prob = sparse_problem(inst, xi, mu_pen, lambda_reg)
    stop = StoppingRule(stop_kind or "relative_residual", err, maxiter)
    cfg["stop_kind"] = stop.kind
    if algorithm == "vsapg":
        return run_vsapg(prob, params or VsaPGParams(), stop=stop,
                         diagnose=diagnose, config=cfg)
    return run_palm(prob, params or PalmParams(), stop=stop, config=cfg)


# denoising

def phantom(h=256, w=256):
    """Piecewise-constant test image with a disc and a linear ramp, in [0, 1]."""
    yy, xx = np.mgrid[0:h, 0:w].astype(float)
    yy /= h
    xx /= w
    img = np.full((h, w), 0.2)
    img[(yy > 0.1) & (yy < 0.45) & (xx > 0.1) & (xx < 0.4)] = 0.8
    img[(yy > 0.55) & (yy < 0.9) & (xx > 0.15) & (xx < 0.35)] = 0.5
    img[(yy - 0.3) ** 2 + (xx - 0.7) ** 2 < 0.15 ** 2] = 0.95
    band = (yy > 0.6) & (yy < 0.85) & (xx > 0.5) & (xx < 0.9)
    img[band] = 0.1 + 0.8 * (xx[band] - 0.5) / 0.4
    return img


@dataclass(frozen=True)
class DenoiseInstance:
    clean: np.ndarray
    noisy: np.ndarray
    D: Gradient2D
    lambda_reg: float
    mu_pen: float
    seed: int
    noise_std: float = 0.01
    xi: float = 0.5

    @property
    def shape(self):
        return self.clean.shape


def make_denoise(clean=None, seed=0, noise_std=0.01, lambda_reg=0.05,
                 mu_pen=1.0, xi=0.5):
    """Add ``N(0, noise_std^2)`` noise to `clean` (the phantom by default)."""
    clean = phantom() if clean is None else np.asarray(clean, dtype=float)
    if clean.ndim != 2:
        raise ValueError(f"expected a 2-D grayscale image, got shape {clean.shape}")
    if noise_std < 0:
        raise ValueError(f"noise_std must be nonnegative, got {noise_std}")
    rng = np.random.default_rng(seed)
    noisy = clean + noise_std * rng.standard_normal(clean.shape)
    h, w = clean.shape
    return DenoiseInstance(clean, noisy, Gradient2D(h, w), float(lambda_reg),
                           float(mu_pen), int(seed), float(noise_std), float(xi))


def denoise_problem(inst: DenoiseInstance):
    """``0.5||x - noisy||^2 + sum_i r(y_i) + (mu_pen/2)||y - D x||^2``."""
    f = QuadraticTether(inst.noisy.ravel())
    H = PenaltyGrad(inst.mu_pen, inst.D)
    return CompositeProblem(f, MCP(inst.lambda_reg, inst.xi), H,
                            Identity(inst.D.output_dim))


def run_denoise_experiment(inst: DenoiseInstance, algorithm, err=1e-2,
                           maxiter=500, params=None, diagnose=False):
    """Denoise from ``(x, y) = (noisy, D noisy)``, stopping on displacement.

    The report's ``snr_db`` entry in ``config`` scores the restored image
    against ``inst.clean``. `diagnose` turns on the per-iteration descent
    check for vsapg (about doubles the cost of a run).
    """
    if algorithm not in DENOISE_ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected one of "
                         f"{DENOISE_ALGORITHMS}")
    prob = denoise_problem(inst)
    x0 = inst.noisy.ravel()
    y0 = inst.D.apply(x0)
    stop = StoppingRule("displacement", err, maxiter)
    h, w = inst.shape
    cfg = {"experiment": "denoise", "m": h, "n": w, "seed": inst.seed,
           "generator": GENERATOR, "noise_std": inst.noise_std, "xi": inst.xi,
           "lambda_reg": inst.lambda_reg, "mu_pen": inst.mu_pen}
    if algorithm == "vsapg":
        rep = run_vsapg(prob, params or VsaPGParams(), x0, y0, stop,
                        diagnose=diagnose, config=cfg)
    else:
        rep = run_palm(prob, params or PalmParams(30.0, 30.0), x0, y0, stop,
                       config=cfg)
    rep.config["snr_db"] = snr(inst.clean, rep.x.reshape(h, w))
    return rep


def snr(reference, restored):
    """``20 log10(||reference|| / ||restored - reference||)`` in dB.

    Identical images give ``inf`` (see :func:`format_snr`).
    """
    reference = np.asarray(reference, dtype=float)
    restored = np.asarray(restored, dtype=float)
    if reference.shape != restored.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {restored.shape}")
    e = np.linalg.norm(restored - reference)
    if e == 0.0:
        return math.inf
    return 20.0 * math.log10(np.linalg.norm(reference) / e)


def format_snr(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return "exact" if v == math.inf else _num(v)


# CSV and instance files

def _num(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _echo_value(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest string that round-trips
    if isinstance(v, np.integer):
        return str(int(v))
    return str(v)


def _echo_lines(config):
    return [f"# {key}={_echo_value(config[key])}\n" for key in sorted(config)]


def write_trace_csv(path, report: RunReport, config=None, timing=False):
    """Write one row per trace entry with the configuration echoed on top.

    Wall times are written only when `timing` is true; otherwise the
    ``time_ms`` column is empty so the file is reproducible byte for byte.
    """
    cfg = dict(report.config)
    cfg.update(config or {})
    cfg.update({"algorithm": report.algorithm, "termination": report.termination,
                "timing": timing})
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.writelines(_echo_lines(cfg))
        fh.write(",".join(TRACE_HEADER) + "\n")
        for r in report.trace:
            vals = [_num(r.k)] + [_num(getattr(r, c)) for c in TRACE_HEADER[1:-1]]
            vals.append(_num(r.time_ms) if timing else "")
            fh.write(",".join(vals) + "\n")


def summary_row(report: RunReport, err, snr_db=None, timing=False, status=None):
    cfg = report.config
    row = {
        "experiment": cfg.get("experiment", ""),
        "algorithm": report.algorithm,
        "m": cfg.get("m", ""),
        "n": cfg.get("n", ""),
        "err": err,
        "seed": cfg.get("seed", ""),
        "iters": report.iterations,
        "time_ms": report.elapsed_ms if timing else None,
        "final_residual": report.final_residual,
        "snr_db": snr_db,
    }
    if status is not None:
        row["status"] = status
    return row


def write_summary_csv(path, rows, config=None, status=False):
    """Write summary rows (dicts keyed by the header) with a config echo."""
    header = SUMMARY_HEADER + (["status"] if status else [])
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.writelines(_echo_lines(config or {}))
        fh.write(",".join(header) + "\n")
        for row in rows:
            out = []
            for col in header:
                v = row.get(col)
                if col == "snr_db":
                    out.append(format_snr(v))
                elif isinstance(v, str):
                    out.append(v)
                else:
                    out.append(_num(v))
            fh.write(",".join(out) + "\n")


def dump_instance(path, inst: SparseInstance):
    """Key=value header, a blank line, then ``x0`` and ``b`` values.

    ``C`` is not stored; :func:`load_instance` regenerates it from the seed.
    """
    head = {"generator": GENERATOR, "seed": inst.seed, "m": inst.m, "n": inst.n,
            "noise_var": _num(inst.noise_var), "lambda_reg": _num(inst.lambda_reg)}
    with open(path, "w", encoding="ascii") as fh:
        for k, v in head.items():
            fh.write(f"{k}={v}\n")
        fh.write("\n")
        fh.write(" ".join(_num(v) for v in inst.x0) + "\n")
        fh.write(" ".join(_num(v) for v in inst.b) + "\n")


def load_instance(path):
    with open(path, "r", encoding="ascii") as fh:
        text = fh.read()
    head_txt, _, body = text.partition("\n\n")
    head = dict(line.split("=", 1) for line in head_txt.splitlines() if line)
    if head.get("generator") != GENERATOR:
        raise ValueError(f"instance was written with generator "
                         f"{head.get('generator')!r}, this build uses {GENERATOR!r}")
    m, n, seed = int(head["m"]), int(head["n"]), int(head["seed"])
    noise_var = float(head["noise_var"])
    vals = np.array(body.split(), dtype=float)
    if vals.size != n + m:
        raise ValueError(f"expected {n + m} values after the header, found {vals.size}")
    x0, b = vals[:n], vals[n:]
    C, _, _ = _sparse_draws(m, n, seed, noise_var)
    C = DenseMap(C)
    return SparseInstance(C, b, x0, b - C.apply(x0), float(head["lambda_reg"]),
                          seed, noise_var)


def trace_filename(experiment, algorithm, m, n, err, seed):
    return f"trace_{experiment}_{algorithm}_{m}x{n}_err{err:.0e}_seed{seed}.csv"


def output_dir(default="."):
    return os.environ.get("VSAPG_OUTPUT_DIR", default)
