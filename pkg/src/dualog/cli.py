"""Batch command-line front end: accuracy sweeps, the QR benchmark, vector
file utilities, and a backend micro-benchmark.

Every run is deterministic given its flags and seed; CSV outputs embed the
resolved configuration in a leading comment line.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import analysis, oracle
from .batch import exp_batch, ln_batch
from .dualbase import (
    DualBase,
    db_decode,
    db_encode,
    log32_config,
    log64_config,
    read_vector_file,
    write_vector_file,
)
from .flma import inner_product
from .linalg import CondSpec, FlmaArithmetic, OracleArithmetic, SoftFloatArithmetic, lsq_error

_PRESETS = {"log32": log32_config, "log64": log64_config}


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(","))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(","))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(_PRESETS), default="log32")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="worker count for reference generation")
    p.add_argument("--out", help="CSV output path")


def _kernel_sweep_args(p: argparse.ArgumentParser, kind: str) -> None:
    _add_common(p)
    p.add_argument("--I", dest="i_values", type=_ints, default=None, help="comma list")
    p.add_argument("--lp", dest="lp_values", type=_ints, default=None, help="comma list of ell=p")
    p.add_argument("--r", dest="r_values", type=_ints, default=None, help="comma list")
    if kind == "log":
        p.add_argument("--s", dest="s_values", type=_ints, default=None, help="comma list")
    p.add_argument("--x-bits", type=int, default=None)
    p.add_argument("--y-bits", type=int, default=None)
    p.add_argument("--samples", type=int, default=1 << 16,
                   help="sample count when the domain is too wide for exhaustion")


def _kernel_spec(args, kind: str) -> analysis.SweepSpec:
    cfg = _PRESETS[args.preset]()
    kc = cfg.exp_cfg if kind == "exp" else cfg.log_cfg
    x_bits = args.x_bits if args.x_bits is not None else (cfg.F if kind == "exp" else cfg.F)
    y_bits = args.y_bits if args.y_bits is not None else x_bits
    exhaustive = x_bits <= 24
    return analysis.SweepSpec(
        kernel=kind,
        i_values=args.i_values or (kc.I,),
        lp_values=args.lp_values or (kc.ell,),
        r_values=args.r_values or (kc.r,),
        s_values=(getattr(args, "s_values", None) or ((kc.s,) if kind == "log" else ())),
        x_bits=x_bits,
        y_bits=y_bits,
        exhaustive=exhaustive,
        x_samples=args.samples,
        seed=args.seed,
    )


def _cmd_kernel_sweep(args, kind: str) -> int:
    spec = _kernel_spec(args, kind)
    t0 = time.perf_counter()
    results = analysis.sweep_exp(spec, args.jobs) if kind == "exp" else analysis.sweep_log(spec, args.jobs)
    for cfg, st in results:
        s_part = f" s={cfg.s}" if kind == "log" else ""
        print(f"{kind} I={cfg.I} ell=p={cfg.ell} r={cfg.r}{s_part}: "
              f"max={analysis.format_fraction(st.max_ulp_error)} ulp, "
              f"(0.5,1]={st.frac_half_to_1 * 100:.2f}%, monotone={st.monotone}")
    print(f"# swept {len(results)} config(s) x {results[0][1].total} inputs in {time.perf_counter() - t0:.1f}s")
    if args.out:
        note = (f"kind={kind} preset={args.preset} x_bits={spec.x_bits} y_bits={spec.y_bits} "
                f"exhaustive={spec.exhaustive} samples={spec.x_samples} seed={args.seed}")
        analysis.write_csv(args.out, kind, analysis.sweep_rows_exp_log(results), note)
    return 0


def _cmd_add_sweep(args) -> int:
    spec = analysis.SweepSpec(
        kernel="flma_add",
        alpha_values=args.alpha,
        beta_values=args.beta,
        exhaustive=args.full,
        x_samples=args.x_samples,
        y_samples=args.y_count,
        seed=args.seed,
    )
    results = analysis.sweep_flma_add(spec, args.jobs)
    for r in results:
        print(f"add alpha={r.alpha} beta={r.beta}: samples={r.samples} "
              f"max={r.max_logulp} log ulp, incorrect={r.frac_incorrect * 100:.4f}%")
    if args.out:
        rows = [{"alpha": r.alpha, "beta": r.beta, "samples": r.samples,
                 "max_logulp": r.max_logulp, "frac_incorrect": f"{r.frac_incorrect:.8f}"}
                for r in results]
        note = (f"x grid: {'exhaustive' if args.full else args.x_samples} over [1,2); "
                f"y: {args.y_count} random normalized codes, uniform over codes; seed={args.seed}")
        analysis.write_csv(args.out, "flma_add", rows, note)
    return 0


def _cmd_cancel(args) -> int:
    results = analysis.cancel_study(args.alpha, k_max=args.k_max)
    for c in results:
        print(f"cancel alpha={c.alpha}: max={c.max_logulp} log ulp, "
              f"max abs err={c.max_abs_err:.3e} over k=1..{c.k_max}")
    if args.out:
        rows = [{"alpha": c.alpha, "k_range": f"1..{c.k_max}", "max_logulp": c.max_logulp,
                 "max_abs_err": repr(c.max_abs_err)} for c in results]
        analysis.write_csv(args.out, "cancel", rows, f"beta=1 k_max={args.k_max}")
    return 0


def _arith_by_name(name: str):
    if name == "log32":
        return FlmaArithmetic(log32_config(), name="log32")
    if name == "log64":
        return FlmaArithmetic(log64_config(), name="log64")
    if name == "float32":
        return SoftFloatArithmetic(32)
    if name == "float64":
        return SoftFloatArithmetic(64)
    if name == "oracle":
        return OracleArithmetic()
    raise ValueError(f"unknown arithmetic {name!r}")


def _cmd_qr_bench(args) -> int:
    ariths = [_arith_by_name(n) for n in args.arithmetics.split(",")]
    rows = []
    for kappa in args.kappas:
        spec = CondSpec(n=args.n, kappa=kappa, seed=args.seed, trials=args.trials)
        batch = lsq_error(spec, ariths)
        rows.extend(batch)
        by_name = {}
        for r in batch:
            by_name.setdefault(r["arithmetic"], []).append(r["error_l2"])
        summary = "  ".join(f"{k}: median {sorted(v)[len(v) // 2]:.3e}" for k, v in by_name.items())
        print(f"kappa={kappa:g}: {summary}")
    if args.out:
        out_rows = [{**r, "error_l2": repr(r["error_l2"])} for r in rows]
        analysis.write_csv(args.out, "qr", out_rows,
                           f"n={args.n} trials={args.trials} seed={args.seed} "
                           f"sampling=upper-triangle arithmetics={args.arithmetics}")
    return 0


def _random_vector(cfg, n: int, gen) -> list[DualBase]:
    codes = gen.integers(0, cfg.ln2c, n)
    return [DualBase(b=int(c)) for c in codes]


def _cmd_dot(args) -> int:
    cfg = _PRESETS[args.preset]()
    if args.x_file or args.y_file:
        if not (args.x_file and args.y_file):
            raise ValueError("dot needs both --x-file and --y-file, or neither")
        xs = read_vector_file(args.x_file, cfg)
        ys = read_vector_file(args.y_file, cfg)
    else:
        gen = np.random.Generator(np.random.Philox(key=[args.seed & 0xFFFFFFFFFFFFFFFF, 0xD07]))
        xs = _random_vector(cfg, args.n, gen)
        ys = _random_vector(cfg, args.n, gen)
    result = inner_product(xs, ys, cfg)
    exact = oracle.ref_dot([db_decode(x, cfg, 128) for x in xs],
                           [db_decode(y, cfg, 128) for y in ys])
    decoded = db_decode(result, cfg, 128)
    rel = abs((decoded.to_fraction() - exact.to_fraction()) / exact.to_fraction()) if exact.value != 0 else 0
    print(f"result: {_format_db(result, cfg)}  decoded={float(decoded.value)!r}")
    print(f"oracle: {float(exact.value)!r}  relative error={float(rel):.3e}")
    return 0


def _cmd_gen_vectors(args) -> int:
    cfg = _PRESETS[args.preset]()
    gen = np.random.Generator(np.random.Philox(key=[args.seed & 0xFFFFFFFFFFFFFFFF, 0x6E4]))
    write_vector_file(args.out, _random_vector(cfg, args.n, gen), cfg)
    print(f"wrote {args.n} values to {args.out}")
    return 0


def _format_db(x: DualBase, cfg) -> str:
    if x.zero:
        return "zero"
    if x.inf:
        return f"{'+' if x.sign > 0 else '-'} inf"
    hexw = (cfg.F + 3) // 4
    return f"{'+' if x.sign > 0 else '-'} a={x.a} b=0x{x.b:0{hexw}x}"


def _cmd_encode(args) -> int:
    cfg = _PRESETS[args.preset]()
    from fractions import Fraction

    x = db_encode(Fraction(args.value), cfg)
    print(_format_db(x, cfg))
    if args.decimal:
        print(f"decoded: {float(db_decode(x, cfg, 96).value)!r}")
    return 0


def _cmd_decode(args) -> int:
    cfg = _PRESETS[args.preset]()
    tokens = args.value.replace("=", " ").split()
    try:
        sign = {"+": 1, "-": -1}[tokens[0]]
        a = int(tokens[tokens.index("a") + 1])
        b = int(tokens[tokens.index("b") + 1], 0)
    except (KeyError, ValueError, IndexError):
        raise ValueError(f"cannot parse {args.value!r}; expected like '+ a=0 b=0x000000'")
    x = DualBase(sign=sign, a=a, b=b)
    if b >= cfg.ln2c:
        raise ValueError(f"b code {b:#x} is not normalized for F={cfg.F}")
    print(repr(float(db_decode(x, cfg, 96).value)))
    return 0


def _cmd_bench(args) -> int:
    cfg = _PRESETS[args.preset]()
    limit = oracle.ln2_code(cfg.F)
    n = min(args.n, limit)
    codes = np.arange(n, dtype=np.int64)
    ln_codes = (np.int64(1) << cfg.log_cfg.x_bits) + codes
    timings = {}
    for be in ("numpy", "numba"):
        os.environ["DUALOG_BACKEND"] = be
        try:
            exp_batch(codes[:16], cfg.exp_cfg)  # warm-up / compile
        except RuntimeError as exc:
            print(f"{be}: unavailable ({exc})")
            continue
        best_exp = min(_timed(lambda: exp_batch(codes, cfg.exp_cfg)) for _ in range(args.repeat))
        best_ln = min(_timed(lambda: ln_batch(ln_codes, cfg.log_cfg)) for _ in range(args.repeat))
        timings[be] = (best_exp, best_ln)
        print(f"{be:6s}: exp {n / best_exp / 1e6:8.1f} Mops/s ({best_exp:.3f}s)   "
              f"ln {n / best_ln / 1e6:8.1f} Mops/s ({best_ln:.3f}s)")
    if "numpy" in timings and "numba" in timings:
        print(f"numba speedup: exp {timings['numpy'][0] / timings['numba'][0]:.1f}x, "
              f"ln {timings['numpy'][1] / timings['numba'][1]:.1f}x")
    os.environ.pop("DUALOG_BACKEND", None)
    return 0


def _timed(fn) -> float:
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dualog",
                                 description="dual-base logarithmic arithmetic analysis harness")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exp-sweep", help="exhaustive exp kernel ulp sweep")
    _kernel_sweep_args(p, "exp")
    p.set_defaults(fn=lambda a: _cmd_kernel_sweep(a, "exp"))

    p = sub.add_parser("log-sweep", help="exhaustive ln kernel ulp sweep")
    _kernel_sweep_args(p, "log")
    p.set_defaults(fn=lambda a: _cmd_kernel_sweep(a, "log"))

    p = sub.add_parser("add-sweep", help="FLMA addition log-ulp sweep")
    _add_common(p)
    p.add_argument("--alpha", type=_ints, default=(1, 2))
    p.add_argument("--beta", type=_ints, default=(1, 2))
    p.add_argument("--x-samples", type=int, default=4096)
    p.add_argument("--y-count", type=int, default=64)
    p.add_argument("--full", action="store_true", help="exhaustive x grid (reproduction scale)")
    p.set_defaults(fn=_cmd_add_sweep)

    p = sub.add_parser("cancel-study", help="catastrophic cancellation study")
    _add_common(p)
    p.add_argument("--alpha", type=_ints, default=(1, 2, 4, 8, 14))
    p.add_argument("--k-max", type=int, default=1024)
    p.set_defaults(fn=_cmd_cancel)

    p = sub.add_parser("qr-bench", help="least-squares QR accuracy benchmark")
    _add_common(p)
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--kappas", dest="kappas", type=_floats,
                   default=(1.0, 1e2, 1e4, 1e6, 1e8, 1e10))
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--arithmetics", default="log32,float32")
    p.set_defaults(fn=_cmd_qr_bench)

    p = sub.add_parser("dot", help="FLMA inner product vs oracle")
    _add_common(p)
    p.add_argument("--n", type=int, default=128)
    p.add_argument("--x-file")
    p.add_argument("--y-file")
    p.set_defaults(fn=_cmd_dot)

    p = sub.add_parser("gen-vectors", help="write a random dual-base vector file")
    _add_common(p)
    p.add_argument("--n", type=int, default=128)
    p.set_defaults(fn=_cmd_gen_vectors)

    p = sub.add_parser("encode", help="encode a decimal value")
    p.add_argument("value")
    p.add_argument("--preset", choices=sorted(_PRESETS), default="log32")
    p.add_argument("--decimal", action="store_true")
    p.set_defaults(fn=_cmd_encode)

    p = sub.add_parser("decode", help="decode '+ a=0 b=0x000000'")
    p.add_argument("value")
    p.add_argument("--preset", choices=sorted(_PRESETS), default="log32")
    p.set_defaults(fn=_cmd_decode)

    p = sub.add_parser("bench", help="compare numpy and numba kernel backends")
    p.add_argument("--preset", choices=sorted(_PRESETS), default="log32")
    p.add_argument("--n", type=int, default=1 << 22)
    p.add_argument("--repeat", type=int, default=3)
    p.set_defaults(fn=_cmd_bench)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OverflowError, ZeroDivisionError, FileNotFoundError) as exc:
        print(f"dualog: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
