"""Command-line frontend: ``qgt {rate,de,threshold,simulate,graph,rerun}``.

Exit codes: 0 success/converged, 1 usage or parameter error, 2 DE stall,
3 threshold search infeasible or bracket error, 4 rerun output differs from
the manifest.
"""
from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import os
import sys
from fractions import Fraction

from qgt import __version__, de, mc
from qgt.ensemble import EnsembleSpec, Scheme, as_fraction, coupled_rate, dc_for_rate, rate
from qgt.errors import BracketError, InfeasibleError, ParameterError, SamplingError
from qgt.graph import sample_coupled, sample_regular, write_edgelist

EXIT_OK, EXIT_USAGE, EXIT_STALL, EXIT_SEARCH, EXIT_MISMATCH = 0, 1, 2, 3, 4
# flags that never change an output byte
_NOT_ECHOED = {"threads", "config", "manifest", "func", "command"}
_OUTPUT_KEY = {"de": "trace"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fraction_arg(text: str) -> Fraction:
    try:
        return as_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number or fraction: {text!r}")


def float_list(text: str) -> list[float]:
    return [float(fraction_arg(x)) for x in text.split(",") if x.strip()]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment; dashes and underscores are interchangeable."""
    out = {}
    with open(path) as fh:
        for no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{no}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def default_threads() -> int:
    env = os.environ.get("QGT_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise UsageError(f"QGT_THREADS must be an integer, got {env!r}")
        if n < 1:
            raise UsageError("QGT_THREADS must be positive")
        return n
    return os.cpu_count() or 1


# ------------------------------------------------------------------ helpers

def _scheme_t(args):
    scheme = Scheme(args.scheme)
    t = args.t if scheme is Scheme.GLDPC else 0
    if scheme is Scheme.LDPC and args.t:
        raise ParameterError("the LDPC scheme has t = 0")
    return scheme, t


def _coupling(args):
    if args.w:
        return args.w, args.L if args.L is not None else de.default_length(args.w)
    return 0, None


def _spec(args) -> EnsembleSpec:
    scheme, t = _scheme_t(args)
    if args.dc is None:
        if args.omega is None:
            raise ParameterError("give --dc or --omega")
        dc, _ = dc_for_rate(scheme, t, args.dv, args.omega)
    else:
        dc = args.dc
    spec = EnsembleSpec(scheme, args.dv, dc, t)
    w, L = _coupling(args)
    return spec.with_coupling(w, L) if w else spec


def _emit(obj, out=None):
    line = json.dumps(obj, sort_keys=True)
    if out:
        with open(out, "w") as fh:
            fh.write(line + "\n")
    else:
        print(line)


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _echo(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k in _NOT_ECHOED:
            continue
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, list):
            v = ",".join(repr(x) for x in v)
        out[k] = v
    return out


def write_manifest(path, args, outputs, started) -> None:
    man = {
        "subcommand": args.command,
        "params": _echo(args),
        "version": __version__,
        "base_seed": getattr(args, "seed", None),
        "outputs": {p: _sha256(p) for p in outputs if p and os.path.exists(p)},
        "started": started,
        "finished": _now(),
    }
    with open(path, "w") as fh:
        json.dump(man, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


# ------------------------------------------------------------- subcommands

def cmd_rate(args) -> int:
    scheme, t = _scheme_t(args)
    spec = EnsembleSpec(scheme, args.dv, args.dc, t)
    print(f"omega = {rate(spec)!r}")
    w, L = _coupling(args)
    if w:
        print(f"omega_sc = {coupled_rate(spec.with_coupling(w, L))!r}")
    return EXIT_OK


def cmd_de(args) -> int:
    spec = _spec(args)
    params = de.DeParams(spec, float(args.gamma), args.max_iters, args.eps_success, args.eps_stall)
    run = de.run_de(params, trace=bool(args.trace), trace_every=args.trace_every)
    if args.trace:
        with open(args.trace, "w", newline="") as fh:
            de.write_trace_csv(run, fh, params.ldpc)
    _emit({
        "verdict": run.verdict, "iterations": run.iterations, "gamma": float(args.gamma),
        "scheme": spec.scheme.value, "dv": spec.dv, "dc": spec.dc, "t": spec.t, "w": spec.w, "L": spec.L,
        "max_p": float(run.state.p.max()), "max_increase": run.max_increase,
    })
    return EXIT_OK if run.converged else EXIT_STALL


def cmd_threshold(args) -> int:
    scheme, t = _scheme_t(args)
    w, L = _coupling(args)
    kw = {"max_iters": args.max_iters} if args.max_iters else {}
    if args.mode == "gamma":
        spec = _spec(args)
        res = de.gamma_threshold(spec, tol=args.tol, **kw)
    else:
        if args.gamma is None:
            raise ParameterError("omega mode needs --gamma")
        res = de.omega_threshold(scheme, t, args.dv, float(args.gamma), w=w, L=L, **kw)
    d = res.to_dict()
    d["threshold_percent"] = 100 * res.value
    _emit(d, args.out)
    return EXIT_OK


def _sim_config(args) -> mc.SimConfig:
    if args.omegas and args.dc is None and args.omega is None:
        # placeholder degree; each rate point picks its own
        args = argparse.Namespace(**{**vars(args), "omega": args.omegas[0]})
    spec = _spec(args)
    size = args.nb if spec.coupling else args.n
    if size is None:
        raise ParameterError("give --n (uncoupled) or --nb (coupled)")
    if args.omegas:
        size = mc._fit_size(spec, size)
    return mc.SimConfig(
        spec, size, gammas=tuple(args.gamma_grid), omegas=tuple(args.omegas or ()),
        decoder=args.decoder, W=args.W, min_trials=args.min_trials,
        min_error_events=args.min_errors, max_trials=args.max_trials, base_seed=args.seed,
        reuse_graph=args.reuse_graph, fixed_k=args.fixed_k, exploit_full=args.exploit_full,
    )


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    records = mc.sweep(cfg, threads=args.threads)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            mc.write_csv(records, fh)
    else:
        mc.write_csv(records, sys.stdout)
    if args.out and not args.manifest:
        write_manifest(args.out + ".manifest.json", args, [args.out], _now())
    return EXIT_OK


def cmd_graph(args) -> int:
    if args.w:
        g = sample_coupled(args.nb, args.dv, args.dc, args.w, args.L or de.default_length(args.w), args.seed)
    else:
        g = sample_regular(args.n, args.dv, args.dc, args.seed)
    write_edgelist(g, args.out)
    return EXIT_OK


def cmd_rerun(args) -> int:
    with open(args.manifest_in) as fh:
        man = json.load(fh)
    argv = [man["subcommand"]]
    params = dict(man["params"])
    key = _OUTPUT_KEY.get(man["subcommand"], "out")
    recorded_out = params.get(key)
    if args.out:
        params[key] = args.out
    for name, val in params.items():
        if val is None or val is False:
            continue
        flag = "--" + name.replace("_", "-")
        if name == "gamma_grid":
            flag = "--gamma"
        argv += [flag] if val is True else [flag, str(val)]
    if args.threads:
        argv += ["--threads", str(args.threads)]
    code = main(argv)
    want = man["outputs"].get(recorded_out) if recorded_out else None
    if code == EXIT_USAGE or not want:
        return code
    if _sha256(params[key]) != want:
        print(f"rerun output {params[key]} differs from the manifest", file=sys.stderr)
        return EXIT_MISMATCH
    return code


# ------------------------------------------------------------------ parser

def _ensemble_flags(p, need_dc=True):
    p.add_argument("--scheme", choices=["ldpc", "gldpc"], default="ldpc")
    p.add_argument("--t", type=int, default=0, help="correction radius (GLDPC)")
    p.add_argument("--dv", type=int, required=True)
    if need_dc:
        p.add_argument("--dc", type=int, required=True)
    else:
        p.add_argument("--dc", type=int)
        p.add_argument("--omega", type=fraction_arg, help="target rate; dc from the rate search")
    p.add_argument("--w", type=int, default=0, help="coupling memory (0 = uncoupled)")
    p.add_argument("--L", type=int, help="coupling length (default 100*(w+1))")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="qgt", description="Quantitative group testing on sparse graphs.")
    ap.add_argument("--version", action="version", version=f"qgt {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate", help="rate of a design")
    _ensemble_flags(p)
    p.set_defaults(func=cmd_rate)

    p = sub.add_parser("de", help="run density evolution")
    _ensemble_flags(p, need_dc=False)
    p.add_argument("--gamma", type=fraction_arg, required=True)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--eps-success", type=float, default=de.EPS_SUCCESS)
    p.add_argument("--eps-stall", type=float, default=de.EPS_STALL)
    p.add_argument("--trace", help="write the DE trace CSV here")
    p.add_argument("--trace-every", type=int, default=1)
    p.set_defaults(func=cmd_de)

    p = sub.add_parser("threshold", help="gamma or omega threshold search")
    p.add_argument("--mode", choices=["gamma", "omega"], required=True)
    _ensemble_flags(p, need_dc=False)
    p.add_argument("--gamma", type=fraction_arg)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("simulate", help="Monte Carlo sweep")
    _ensemble_flags(p, need_dc=False)
    p.add_argument("--gamma", dest="gamma_grid", type=float_list, required=True,
                   help="comma-separated prevalences (decimals or fractions)")
    p.add_argument("--omegas", type=float_list, help="comma-separated rates for a rate sweep")
    p.add_argument("--n", type=int, help="items (uncoupled)")
    p.add_argument("--nb", type=int, help="items per position (coupled)")
    p.add_argument("--decoder", choices=["full", "window"], default="full")
    p.add_argument("--W", type=int)
    p.add_argument("--min-trials", type=int, default=10)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-trials", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reuse-graph", action="store_true")
    p.add_argument("--fixed-k", action="store_true", help="exactly round(gamma*n) defectives (not i.i.d.)")
    p.add_argument("--exploit-full", action="store_true", help="experimental GLDPC shortcut")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("graph", help="sample a graph and export its edge list")
    p.add_argument("--dv", type=int, required=True)
    p.add_argument("--dc", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--nb", type=int)
    p.add_argument("--w", type=int, default=0)
    p.add_argument("--L", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("rerun", help="re-execute a run manifest and verify its output")
    p.add_argument("manifest_in", metavar="MANIFEST")
    p.add_argument("--out", help="write the output here instead of the recorded path")
    p.set_defaults(func=cmd_rerun)

    for name, sp in sub.choices.items():
        sp.add_argument("--threads", type=int, help="worker processes (default QGT_THREADS or all cores)")
        if name not in ("rerun", "simulate"):
            sp.add_argument("--manifest", help="write a run manifest here")
        elif name == "simulate":
            sp.add_argument("--manifest", help="manifest path (default OUT.manifest.json)")
        if name != "rerun":
            sp.add_argument("--config", help="file of 'key = value' lines mirroring the flags")
    return ap


def _apply_config(parser, argv):
    """Load ``--config`` values as subcommand defaults (flags given explicitly win)."""
    if "--config" not in argv and not any(a.startswith("--config=") for a in argv):
        return
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("command", nargs="?")
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    sub = parser._subparsers._group_actions[0].choices.get(known.command)
    if sub is None or not known.config:
        return
    cfg = read_config(known.config)
    dests = {a.dest: a for a in sub._actions}
    alias = {"gamma": "gamma_grid"} if known.command == "simulate" else {}
    defaults = {}
    for key, val in cfg.items():
        dest = alias.get(key, key)
        if dest not in dests or dest in ("config", "help"):
            raise UsageError(f"unknown config key {key!r}")
        act = dests[dest]
        if isinstance(act, argparse._StoreTrueAction):
            defaults[dest] = _bool(val)
        else:
            defaults[dest] = act.type(val) if act.type else val
            act.required = False
    sub.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
        if getattr(args, "threads", None) is None:
            args.threads = default_threads()
        if args.threads < 1:
            raise UsageError("--threads must be positive")
        started = _now()
        code = args.func(args)
        if getattr(args, "manifest", None):
            out = getattr(args, _OUTPUT_KEY.get(args.command, "out"), None)
            write_manifest(args.manifest, args, [out], started)
        return code
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else EXIT_OK
    except (UsageError, ParameterError, argparse.ArgumentTypeError) as e:
        print(f"qgt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (BracketError, InfeasibleError) as e:
        print(f"qgt: search failed: {e}", file=sys.stderr)
        return EXIT_SEARCH
    except SamplingError as e:
        print(f"qgt: sampling failed: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"qgt: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
