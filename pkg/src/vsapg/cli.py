"""Command-line front end: ``vsapg {sparse,denoise,sweep,selftest}``.

Settings resolve as built-in defaults, then a ``key=value`` config file
(``--config``), then ``VSAPG_OUTPUT_DIR`` for the output directory, then
explicit flags. A flag that the chosen algorithm does not use is an error.

Exit codes: 0 tolerance met, 1 selftest failure or divergence, 2 iteration limit
reached, 3 infeasible parameters, 4 I/O error, 64 usage error.
"""

import argparse
from concurrent.futures import ProcessPoolExecutor
import os
import sys

from .baselines import PalmParams
from .bench import (DENOISE_ALGORITHMS, SPARSE_ALGORITHMS, gen_sparse,
                    make_denoise, phantom, run_denoise_experiment,
                    run_sparse_experiment, summary_row, dump_instance,
                    write_summary_csv, write_trace_csv)
from .pgm import PGMError, read_pgm, write_pgm
from .report import NonFiniteIterate
from .solver import InfeasibleParameters, VsaPGParams

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_MAXITER = 2
EXIT_INFEASIBLE = 3
EXIT_IO = 4
EXIT_USAGE = 64

ENV_OUTPUT_DIR = "VSAPG_OUTPUT_DIR"

VSAPG_KEYS = ("theta", "mu1", "alpha", "beta", "sigma", "gamma", "eta")
PALM_KEYS = ("c_k", "d_k")
MODEL_KEYS = ("xi", "lambda_reg", "mu_pen")
FLOAT_KEYS = VSAPG_KEYS + PALM_KEYS + MODEL_KEYS + ("err", "noise_std")
INT_KEYS = ("m", "n", "maxiter", "seed", "jobs")
STR_KEYS = ("algo", "image", "out", "algos", "dims", "errs", "seeds", "experiment")
BOOL_KEYS = ("timing", "dump_instance")

USES = {
    "vsapg": set(VSAPG_KEYS) | set(MODEL_KEYS),
    "palm": {"c_k", "d_k"} | set(MODEL_KEYS),
    "pg": {"c_k", "xi", "lambda_reg"},
}

DEFAULTS = {
    "sparse": {"algo": "vsapg", "m": 128, "n": 512, "err": 1e-3, "maxiter": 5000,
               "seed": 1, "xi": 0.5, "mu_pen": 5.0, "out": ".", "timing": False,
               "dump_instance": False},
    "denoise": {"algo": "vsapg", "m": 256, "n": 256, "err": 1e-2, "maxiter": 500,
                "seed": 0, "xi": 0.5, "mu_pen": 1.0, "lambda_reg": 0.05,
                "noise_std": 0.01, "c_k": 30.0, "d_k": 30.0, "out": ".",
                "timing": False},
    "sweep": {"experiment": "sparse", "algos": "vsapg,palm", "dims": "128x512",
              "errs": "1e-2,1e-3,1e-4,1e-5,1e-6", "seeds": "1", "jobs": 1,
              "out": ".", "timing": False, "xi": 0.5},
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _add_solver_flags(p):
    g = p.add_argument_group("solver overrides")
    for key in VSAPG_KEYS + PALM_KEYS + MODEL_KEYS:
        g.add_argument("--" + key.replace("_", "-"), dest=key, type=float,
                       default=None)


def _add_common(p):
    p.add_argument("--config", default=None, help="key=value settings file")
    p.add_argument("--out", default=None, help=f"output directory (env {ENV_OUTPUT_DIR})")
    p.add_argument("--maxiter", type=int, default=None)
    p.add_argument("--timing", action="store_const", const=True, default=None,
                   help="record wall times (outputs are then not byte-reproducible)")


def build_parser():
    parser = _Parser(prog="vsapg", description="VsaPG benchmark runner")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    sp = sub.add_parser("sparse", help="one sparse-recovery run")
    sp.add_argument("--algo", choices=SPARSE_ALGORITHMS, default=None)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--err", type=float, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--dump-instance", dest="dump_instance", action="store_const",
                    const=True, default=None, help="also write the instance file")
    _add_common(sp)
    _add_solver_flags(sp)

    dp = sub.add_parser("denoise", help="one denoising run")
    dp.add_argument("--algo", choices=DENOISE_ALGORITHMS, default=None)
    dp.add_argument("--image", default=None, help="8-bit binary PGM; phantom if omitted")
    dp.add_argument("--m", type=int, default=None, help="phantom height")
    dp.add_argument("--n", type=int, default=None, help="phantom width")
    dp.add_argument("--noise-std", dest="noise_std", type=float, default=None)
    dp.add_argument("--err", type=float, default=None)
    dp.add_argument("--seed", type=int, default=None)
    _add_common(dp)
    _add_solver_flags(dp)

    wp = sub.add_parser("sweep", help="grid of runs, one summary CSV")
    wp.add_argument("--experiment", choices=("sparse", "denoise"), default=None)
    wp.add_argument("--algos", default=None, help="comma list, e.g. vsapg,palm")
    wp.add_argument("--dims", default=None, help="comma list of MxN, e.g. 128x512")
    wp.add_argument("--errs", default=None, help="comma list of tolerances")
    wp.add_argument("--seeds", default=None, help="comma list of seeds")
    wp.add_argument("--jobs", type=int, default=None, help="parallel cells")
    _add_common(wp)
    _add_solver_flags(wp)

    sub.add_parser("selftest", help="run the invariant checks")
    return parser


def _coerce(key, text):
    text = text.strip()
    if key in FLOAT_KEYS:
        return float(text)
    if key in INT_KEYS:
        return int(text)
    if key in BOOL_KEYS:
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if key in STR_KEYS:
        return text
    raise KeyError(key)


def read_config(path):
    """Parse ``key=value`` lines; ``#`` starts a comment.

    A line of the form ``# run.key=value`` (the echo written into every
    output CSV) is read as ``key=value``, so an output file can be passed
    back as ``--config`` to repeat its run.
    """
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if line.startswith("# run."):
                line = line[len("# run."):]
            elif not line or line.startswith("#"):
                continue
            elif "=" not in line and "," in line:
                break  # reached the CSV body of an echoed output file
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            if key == "command":
                continue
            try:
                out[key] = _coerce(key, val)
            except KeyError:
                raise UsageError(f"{path}:{lineno}: unknown setting {key!r}") from None
            except ValueError as exc:
                raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def resolve(args):
    """Merge defaults, config file, environment and flags.

    Returns ``(settings, explicit)`` where `explicit` holds the keys that
    were set by the user rather than by defaults.
    """
    cmd = args.command
    settings = dict(DEFAULTS[cmd])
    explicit = set()
    if args.config:
        try:
            file_cfg = read_config(args.config)
        except OSError as exc:
            raise OSError(f"cannot read config file: {exc}") from exc
        settings.update(file_cfg)
        explicit |= set(file_cfg)
    env_out = os.environ.get(ENV_OUTPUT_DIR)
    if env_out:
        settings["out"] = env_out
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        settings[key] = val
        explicit.add(key)
    return settings, explicit


def _check_relevance(cmd, algos, explicit):
    solver_keys = set(VSAPG_KEYS + PALM_KEYS + MODEL_KEYS)
    used = set().union(*(USES[a] for a in algos))
    if cmd == "denoise":
        used.add("mu_pen")
    bad = sorted(k for k in explicit & solver_keys if k not in used)
    if bad:
        raise UsageError(f"setting(s) {', '.join('--' + k.replace('_', '-') for k in bad)} "
                         f"not used by {'/'.join(algos)}")
    if cmd == "denoise" and "image" in explicit and explicit & {"m", "n"}:
        raise UsageError("--image and --m/--n are mutually exclusive")


def _vsapg_params(s):
    kw = {k: s[k] for k in VSAPG_KEYS if s.get(k) is not None}
    return VsaPGParams(**kw)


def _given(s, key, default):
    v = s.get(key)
    return default if v is None else v


def _params_for(algo, s):
    if algo == "vsapg":
        return _vsapg_params(s)
    if algo == "palm":
        return PalmParams(_given(s, "c_k", 18.0), _given(s, "d_k", 18.0))
    return s.get("c_k")  # pg; None selects ||C||^2


def _run_echo(cmd, s, algo=None):
    """Settings that reproduce this run, as ``run.key`` entries."""
    algo = algo or s["algo"]
    used = USES[algo] | ({"mu_pen"} if cmd == "denoise" else set())
    keys = ["algo", "m", "n", "err", "maxiter", "seed", "timing", "noise_std", "image"]
    keys += [k for k in VSAPG_KEYS + PALM_KEYS + MODEL_KEYS if k in used]
    echo = {"run.command": cmd, "run.algo": algo}
    for k in keys[1:]:
        if s.get(k) is not None:
            echo[f"run.{k}"] = s[k]
    return echo


def _cell_name(experiment, algo, m, n, err, seed):
    return f"{experiment}_{algo}_{m}x{n}_err{err:.0e}_seed{seed}"


def _exit_for(report):
    return EXIT_OK if report.converged else EXIT_MAXITER


def cmd_sparse(s):
    algo = s["algo"]
    inst = gen_sparse(s["m"], s["n"], s["seed"])
    rep = run_sparse_experiment(inst, algo, s["err"], s["maxiter"], xi=s["xi"],
                                mu_pen=s.get("mu_pen", 5.0),
                                lambda_reg=s.get("lambda_reg"),
                                params=_params_for(algo, s), diagnose=False)
    name = _cell_name("sparse", algo, s["m"], s["n"], s["err"], s["seed"])
    echo = _run_echo("sparse", s)
    out = s["out"]
    os.makedirs(out, exist_ok=True)
    write_trace_csv(os.path.join(out, f"trace_{name}.csv"), rep, echo, s["timing"])
    row = summary_row(rep, s["err"], None, s["timing"])
    write_summary_csv(os.path.join(out, f"summary_{name}.csv"), [row],
                      {**rep.config, **echo})
    if s.get("dump_instance"):
        dump_instance(os.path.join(out, f"instance_{s['m']}x{s['n']}_seed{s['seed']}.txt"),
                      inst)
    print(f"{algo}: {rep.termination} after {rep.iterations} iterations, "
          f"final residual {rep.final_residual:.3e}")
    return _exit_for(rep)


def _denoise_instance(s):
    if s.get("image"):
        clean = read_pgm(s["image"])
    else:
        clean = phantom(s["m"], s["n"])
    return make_denoise(clean, s["seed"], s["noise_std"], s["lambda_reg"],
                        s["mu_pen"], s["xi"])


def cmd_denoise(s):
    algo = s["algo"]
    inst = _denoise_instance(s)
    params = _vsapg_params(s) if algo == "vsapg" else PalmParams(s["c_k"], s["d_k"])
    rep = run_denoise_experiment(inst, algo, s["err"], s["maxiter"], params)
    h, w = inst.shape
    name = _cell_name("denoise", algo, h, w, s["err"], s["seed"])
    echo = _run_echo("denoise", s)
    out = s["out"]
    os.makedirs(out, exist_ok=True)
    write_trace_csv(os.path.join(out, f"trace_{name}.csv"), rep, echo, s["timing"])
    row = summary_row(rep, s["err"], rep.config["snr_db"], s["timing"])
    write_summary_csv(os.path.join(out, f"summary_{name}.csv"), [row],
                      {**rep.config, **echo})
    write_pgm(os.path.join(out, f"restored_{name}.pgm"), rep.x.reshape(h, w))
    write_pgm(os.path.join(out, f"noisy_denoise_{h}x{w}_seed{s['seed']}.pgm"), inst.noisy)
    print(f"{algo}: {rep.termination} after {rep.iterations} iterations, "
          f"SNR {rep.config['snr_db']:.4f} dB")
    return _exit_for(rep)


def _split(text, conv, what):
    items = [t.strip() for t in str(text).split(",") if t.strip()]
    try:
        return [conv(t) for t in items]
    except ValueError:
        raise UsageError(f"bad {what} list {text!r}") from None


def _dims(text):
    def one(t):
        a, b = t.lower().split("x")
        return int(a), int(b)
    return _split(text, one, "dims")


def _sweep_cell(cell):
    """Run one sweep cell; never raises. Returns (key, row)."""
    key, s = cell
    experiment, algo, m, n, err, seed = key
    cs = dict(s, algo=algo, m=m, n=n, err=err, seed=seed)
    name = _cell_name(experiment, algo, m, n, err, seed)
    blank = {"experiment": experiment, "algorithm": algo, "m": m, "n": n,
             "err": err, "seed": seed}
    try:
        if experiment == "sparse":
            inst = gen_sparse(m, n, seed)
            rep = run_sparse_experiment(inst, algo, err, cs["maxiter"], xi=cs["xi"],
                                        mu_pen=cs.get("mu_pen") or 5.0,
                                        lambda_reg=cs.get("lambda_reg"),
                                        params=_params_for(algo, cs), diagnose=False)
            snr_db = None
        else:
            inst = _denoise_instance(cs)
            params = (_vsapg_params(cs) if algo == "vsapg"
                      else PalmParams(cs["c_k"], cs["d_k"]))
            rep = run_denoise_experiment(inst, algo, err, cs["maxiter"], params)
            snr_db = rep.config["snr_db"]
        echo = _run_echo(experiment, cs, algo)
        write_trace_csv(os.path.join(cs["out"], f"trace_{name}.csv"), rep, echo,
                        cs["timing"])
        return key, summary_row(rep, err, snr_db, cs["timing"], rep.termination)
    except InfeasibleParameters as exc:
        return key, dict(blank, status="parameter-infeasible: " + _clean(exc))
    except Exception as exc:  # recorded per row, the sweep goes on
        return key, dict(blank, status=f"error: {type(exc).__name__}: {_clean(exc)}")


def _clean(exc):
    return " ".join(str(exc).replace(",", ";").split())


def cmd_sweep(s, explicit):
    experiment = s["experiment"]
    if experiment == "denoise":
        s = dict(s)
        if "dims" not in explicit:
            s["dims"] = "256x256"
        if "errs" not in explicit:
            s["errs"] = "1e-2"
    algos = _split(s["algos"], str, "algorithm")
    allowed = SPARSE_ALGORITHMS if experiment == "sparse" else DENOISE_ALGORITHMS
    for a in algos:
        if a not in allowed:
            raise UsageError(f"unknown algorithm {a!r} for {experiment}")
    dims = _dims(s["dims"])
    errs = _split(s["errs"], float, "err")
    seeds = _split(s["seeds"], int, "seed")
    if not (algos and dims and errs and seeds):
        raise UsageError("empty sweep grid")
    if s["jobs"] < 1:
        raise UsageError(f"--jobs must be at least 1, got {s['jobs']}")
    _check_relevance("sweep" if experiment == "sparse" else "denoise", algos, explicit)
    base = dict(DEFAULTS[experiment])
    base.update({k: v for k, v in s.items() if k in explicit or k in ("out", "timing")})
    base.setdefault("maxiter", DEFAULTS[experiment]["maxiter"])
    os.makedirs(base["out"], exist_ok=True)
    keys = sorted((experiment, a, m, n, e, sd) for a in algos for (m, n) in dims
                  for e in errs for sd in seeds)
    cells = [(k, base) for k in keys]
    if s["jobs"] > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=min(s["jobs"], len(cells))) as ex:
            results = list(ex.map(_sweep_cell, cells))
    else:
        results = [_sweep_cell(c) for c in cells]
    results.sort(key=lambda kr: kr[0])
    rows = [r for _, r in results]
    used = set().union(*(USES[a] for a in algos))
    if experiment == "denoise":
        used |= {"mu_pen", "noise_std"}
    echo = {"run.command": "sweep", **{f"run.{k}": s[k] for k in
            ("experiment", "algos", "dims", "errs", "seeds", "timing")}}
    for k in sorted(base):
        if k == "maxiter" or k in used or (k == "image" and base[k]):
            if base[k] is not None:
                echo[f"run.{k}"] = base[k]
    path = os.path.join(base["out"], f"summary_sweep_{experiment}.csv")
    write_summary_csv(path, rows, echo, status=True)
    statuses = [r.get("status", "") for r in rows]
    print(f"sweep: {len(rows)} cells, "
          f"{sum(st == 'tolerance-met' for st in statuses)} met tolerance; {path}")
    if any(st.startswith("error") for st in statuses):
        return EXIT_IO
    if any(st.startswith("parameter-infeasible") for st in statuses):
        return EXIT_INFEASIBLE
    if any(st != "tolerance-met" for st in statuses):
        return EXIT_MAXITER
    return EXIT_OK


def parse_and_run(argv=None):
    """Run the CLI and return its exit code (never calls ``sys.exit``)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if args.command == "selftest":
        from .selftest import run_all
        return EXIT_OK if run_all(sys.stdout) else EXIT_FAILED
    try:
        s, explicit = resolve(args)
        if args.command == "sweep":
            return cmd_sweep(s, explicit)
        _check_relevance(args.command, [s["algo"]], explicit)
        if args.command == "sparse":
            return cmd_sparse(s)
        return cmd_denoise(s)
    except UsageError as exc:
        print(f"vsapg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleParameters as exc:
        print(f"vsapg: infeasible parameters: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, PGMError) as exc:
        print(f"vsapg: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NonFiniteIterate as exc:
        print(f"vsapg: run diverged: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except ValueError as exc:
        print(f"vsapg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(parse_and_run())


if __name__ == "__main__":
    main()
