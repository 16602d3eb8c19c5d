"""hutchkit command line.

Every command writes its artifacts under ``--output-dir`` and prints a CSV
summary on stdout. Randomness derives from ``--seed`` through named
sub-streams (command, then item index), so reruns are byte-identical and
independent of ``--threads``.

Exit codes: 0 success, 1 certification failure, 2 usage error,
3 resource cap exceeded.
"""

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import analog, combinat, compiler, moments, singletime, states, trace
from .hamiltonians import AngleDistribution, golomb_hamiltonians, sample_G
from .limits import ResourceCapError
from .rng import derive

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3


class UsageError(Exception):
    pass


def read_config(path):
    """key = value lines; '#' starts a comment. Keys may use '-' or '_'."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            key, value = (x.strip() for x in line.split("=", 1))
            out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _emit_csv(rows, fields, path=None):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fields, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    sys.stdout.write(text)


def _out(args):
    d = Path(args.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _dist(text):
    try:
        return AngleDistribution.parse(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _weight(z):
    z = complex(z)
    return repr(z.real) if z.imag == 0 else repr(z)


def _positive(name, value):
    if value is None or value < 1:
        raise UsageError(f"--{name} must be >= 1")


# ---------------------------------------------------------------- commands


def cmd_sample(args):
    _positive("Q", args.Q)
    _positive("K", args.K)
    out = _out(args)
    dist = _dist(args.dist)
    rows = []
    for k in range(args.K):
        rng = derive(args.seed, "sample", k)
        v = states.sample_states(args.family, args.Q, 1, rng, r=args.r, dist=dist, phase_kind=args.phase)[0]
        path = out / f"state_{k:04d}.csv"
        states.write_state_csv(v, path)
        rows.append({"k": k, "file": path.name, "norm": f"{np.linalg.norm(v):.15f}"})
    _emit_csv(rows, ["k", "file", "norm"])
    return EXIT_OK


def cmd_verify(args):
    _positive("Q", args.Q)
    _positive("r", args.r)
    _positive("d", args.d)
    out = _out(args)
    rows = []
    failed_at = None
    for d in range(1, args.d + 1):
        q = moments.quantum_moment_analytic(args.Q, args.r, d)
        c = moments.classical_moment(args.Q, d)
        gap = q.max_abs_diff(c)
        row = {"d": d, "max_abs_diff": f"{gap:.3e}", "match": gap <= args.tol}
        if args.dist and 2 ** (args.Q * d) <= args.dense_cap:
            ex = moments.quantum_moment_exact(args.Q, args.r, d, _dist(args.dist), workers=args.threads)
            row["exact_vs_classical"] = f"{ex.max_abs_diff(c):.3e}"
        rows.append(row)
        if gap > args.tol:
            failed_at = d
            n = moments.write_diff_csv(q, c, out / f"verify_diff_Q{args.Q}_r{args.r}_d{d}.csv", args.tol)
            row["differing_entries"] = n
            break
    certified = args.d if failed_at is None else failed_at - 1
    report = {"Q": args.Q, "r": args.r, "d": args.d, "certified_order": certified, "orders": rows}
    if failed_at is not None:
        lem = combinat.lemma1_exhaustive_check(args.Q, failed_at, args.r)
        ms, ns = lem.violations[0]
        report["counterexample"] = {
            "ms": ["".join(map(str, m)) for m in ms],
            "ns": ["".join(map(str, n)) for n in ns],
            "quantum": _weight(q.entry(ms, ns)),
            "classical": _weight(c.entry(ms, ns)),
        }
    (out / f"verify_Q{args.Q}_r{args.r}_d{args.d}.json").write_text(json.dumps(report, indent=1, default=str))
    _emit_csv(rows, ["d", "max_abs_diff", "match", "exact_vs_classical", "differing_entries"])
    if "counterexample" in report:
        ce = report["counterexample"]
        print(f"counterexample,{' '.join(ce['ms'])},{' '.join(ce['ns'])},{ce['quantum']},{ce['classical']}")
    print(f"certified_order,{certified}")
    return EXIT_OK if certified >= args.d else EXIT_FAIL


def _q_range(args):
    _positive("Q", args.Q)
    hi = args.Q_max if args.Q_max is not None else args.Q
    if hi < args.Q:
        raise UsageError("--Q-max must be >= --Q")
    return range(args.Q, hi + 1)


def cmd_compile(args):
    out = _out(args)
    dist = _dist(args.dist)
    rows = []
    for Q in _q_range(args):
        if Q < 2:
            raise UsageError("compile needs Q >= 2")
        G = sample_G(Q, 2, dist, derive(args.seed, "compile", Q))
        c = compiler.compile(G, rewrite=not args.naive)
        compiler.write_circuit(c, out / f"circuit_Q{Q}.txt")
        row = compiler.resource_report(c)
        if args.verify and Q <= args.verify_max_q:
            fid = abs(np.vdot(compiler.simulate_circuit(c), states.quantum_hutchinson(G)))
            row["fidelity"] = f"{fid:.15f}"
            row["ok"] = row["ok"] and abs(fid - 1) < 1e-10
        rows.append(row)
    fields = ["Q", "n_rz", "n_cnot", "depth", "bound_cnot", "bound_depth", "ok", "depth_no_h", "n_h", "fidelity"]
    _emit_csv(rows, fields, out / "compile.csv")
    if len(rows) > 1:
        from .plotting import resource_sweep

        resource_sweep(rows, out / "compile.png")
    return EXIT_OK if all(r["ok"] for r in rows) else EXIT_FAIL


def cmd_schedule(args):
    out = _out(args)
    rows = []
    inter = analog.Interaction(C6=args.c6, lambda0=args.lambda0)
    for Q in _q_range(args):
        if Q < 2:
            raise UsageError("schedule needs Q >= 2")
        G = sample_G(Q, 2, AngleDistribution.discrete(3), derive(args.seed, "schedule", Q))
        s = analog.build_schedule(G, inter)
        analog.write_schedule(s, out / f"schedule_Q{Q}.json")
        per = max((len(t) for t in s.swaps), default=0)
        leak = max(analog.positions_for_block(b, inter)[1] for b in s.blocks)
        row = {
            "Q": Q,
            "n_blocks": len(s.blocks),
            "n_swaps": s.n_swaps,
            "bound_swaps": Q * (Q - 1) // 2,
            "max_swaps_per_transition": per,
            "max_leakage": f"{leak:.3e}",
            "ok": s.n_swaps <= Q * (Q - 1) // 2 and per <= analog.n_slots(Q) // 2 - 1,
        }
        if args.verify and Q <= args.verify_max_q:
            fid = abs(np.vdot(analog.simulate_schedule(s), states.quantum_hutchinson(G)))
            row["fidelity"] = f"{fid:.15f}"
            row["ok"] = row["ok"] and abs(fid - 1) < 1e-10
        rows.append(row)
    fields = ["Q", "n_blocks", "n_swaps", "bound_swaps", "max_swaps_per_transition", "max_leakage", "ok", "fidelity"]
    _emit_csv(rows, fields, out / "schedule.csv")
    return EXIT_OK if all(r["ok"] for r in rows) else EXIT_FAIL


def _sampler(args, Q):
    dist = _dist(args.dist)

    def draw(K, rng):
        return states.sample_states(args.family, Q, K, rng, r=args.r, dist=dist, phase_kind=args.phase)

    return draw


def cmd_trace(args):
    _positive("K", args.K)
    _positive("trials", args.trials)
    out = _out(args)
    if args.matrix:
        A = trace.read_matrix(args.matrix)
        Q = int(round(np.log2(A.shape[0])))
        if 2**Q != A.shape[0]:
            raise UsageError(f"matrix dimension {A.shape[0]} is not a power of two")
    else:
        _positive("Q", args.Q)
        Q = args.Q
        A = trace.random_hermitian(2**Q, derive(args.seed, "trace", "matrix"))
        trace.write_matrix(A, out / "trace_matrix.txt")
    var, bound = trace.analytic_variance(A)
    draw = _sampler(args, Q)
    rows = []
    for t in range(args.trials):
        est = trace.estimate_trace(A, draw, args.K, derive(args.seed, "trace", t))
        rows.append({
            "trial": t,
            "mean_re": f"{est.mean.real:.12g}",
            "mean_im": f"{est.mean.imag:.12g}",
            "target": f"{est.target.real:.12g}",
            "error": f"{est.error:.6e}",
            "empirical_variance": f"{est.empirical_variance:.6e}",
            "analytic_variance": f"{var:.6e}",
            "frobenius_bound": f"{bound:.6e}",
            "within_3sd": est.error <= 3 * np.sqrt(var / args.K),
        })
    _emit_csv(rows, list(rows[0]), out / "trace.csv")
    return EXIT_OK


def _resolution(family, args, K, key):
    rng = derive(args.seed, "fig1", family, K, key)
    batch = states.sample_states(family, args.Q, K, rng, r=args.r, dist=_dist(args.dist))
    return trace.identity_resolution(batch)


def cmd_fig1(args):
    _positive("Q", args.Q)
    _positive("K", args.K)
    out = _out(args)
    fams = list(states.FAMILIES)
    res = {f: _resolution(f, args, args.K, 0) for f in fams}
    for f, p in res.items():
        trace.heatmap(p, out / f"fig1_{f}.ppm")
    from .plotting import identity_panels, rms_decay

    identity_panels([res[f] for f in fams], fams, out / "fig1.png")
    Ks = [int(k) for k in str(args.Ks).split(",") if k.strip()]
    rows, curves = [], {f: [] for f in ("classical", "quantum")}
    for f in fams:
        for K in sorted(set([args.K] + Ks)):
            p = res[f] if K == args.K else _resolution(f, args, K, 0)
            diag = np.abs(np.diag(p.Pi) - 1).max()
            rows.append({
                "family": f,
                "K": K,
                "offdiag_rms": f"{p.offdiag_rms():.6e}",
                "offdiag_max": f"{p.offdiag_max():.6e}",
                "frobenius_error": f"{p.frobenius_error():.6e}",
                "diag_max_dev": f"{diag:.3e}",
            })
            if f in curves and K in Ks:
                curves[f].append(p.offdiag_rms())
    if len(Ks) > 1:
        rms_decay(Ks, curves, out / "fig1_rms.png")
    _emit_csv(rows, list(rows[0]), out / "fig1_errors.csv")
    return EXIT_OK


def cmd_golomb(args):
    _positive("Q_max", args.Q_max)
    out = _out(args)
    rows, ok = [], True
    for Q in range(1, args.Q_max + 1):
        G1, G2 = golomb_hamiltonians(Q)
        for name, G in (("G1", G1), ("G2", G2)):
            rep = singletime.golomb_check(G.exact_spectrum())
            row = {
                "Q": Q,
                "N": 2**Q,
                "hamiltonian": name,
                "gaps_distinct": rep.gaps_distinct,
                "gap_differences_nonzero": rep.gap_differences_nonzero,
                "min_gap": f"{rep.min_gap:.12g}",
                "min_gap_difference": f"{rep.min_gap_difference:.12g}",
            }
            if Q <= singletime.MAX_DENSE_QUBITS:
                B = singletime.bias_operator(G, singletime.TimeDistribution.fejer(args.sigma))
                row["bias_max"] = f"{np.abs(B).max():.3e}"
            if rep.gap_differences_nonzero:
                row["cancel_sigma"] = f"{singletime.variance_cancellation_sigma(G):.12g}"
            if name == "G2":
                ok = ok and rep.gaps_distinct and rep.min_gap == 1.0
                (out / f"golomb_spectrum_Q{Q}.json").write_text(rep.to_json())
            rows.append(row)
    fields = ["Q", "N", "hamiltonian", "gaps_distinct", "gap_differences_nonzero", "min_gap",
              "min_gap_difference", "bias_max", "cancel_sigma"]
    _emit_csv(rows, fields, out / "golomb.csv")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_lemma1(args):
    _positive("Q", args.Q)
    _positive("d", args.d)
    _positive("r", args.r)
    out = _out(args)
    rep = combinat.lemma1_exhaustive_check(args.Q, args.d, args.r)
    path = out / f"lemma1_Q{args.Q}_d{args.d}_r{args.r}.jsonl"
    path.write_text(rep.to_jsonl())
    _emit_csv([{
        "Q": args.Q, "d": args.d, "r": args.r,
        "classes_checked": rep.classes_checked,
        "violating_classes": len(rep.violations),
        "violating_ordered_pairs": rep.ordered_violations,
        "holds": rep.holds,
    }], ["Q", "d", "r", "classes_checked", "violating_classes", "violating_ordered_pairs", "holds"])
    return EXIT_OK if rep.holds else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--seed", type=int, default=0, help="root seed (default: %(default)s)")
    common.add_argument("--threads", type=int, default=1, help="worker threads (default: %(default)s)")
    common.add_argument("--output-dir", default="out", help="artifact directory (default: %(default)s)")

    p = argparse.ArgumentParser(prog="hutchkit", description="Random-state design and trace-estimation experiments.")
    sub = p.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    s = sub.add_parser("sample", parents=[common], formatter_class=fmt, help="dump random states as CSV")
    s.add_argument("--family", choices=states.FAMILIES, default="quantum")
    s.add_argument("--Q", type=int, default=3)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--K", type=int, default=5)
    s.add_argument("--dist", default="uniform", help="angle law: uniform or Z<k>")
    s.add_argument("--phase", choices=("uniform-phase", "rademacher"), default="uniform-phase")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("verify", parents=[common], formatter_class=fmt, help="certify the design order")
    s.add_argument("--Q", type=int, default=3)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--d", type=int, default=3)
    s.add_argument("--dist", default=None, help="also cross-check the exact discrete ensemble (e.g. Z4)")
    s.add_argument("--dense-cap", type=int, default=4096, help="largest N^d for the exact cross-check")
    s.add_argument("--tol", type=float, default=1e-10)
    s.set_defaults(func=cmd_verify)

    for name, func, help_ in (("compile", cmd_compile, "gate-level circuits and resource table"),
                              ("schedule", cmd_schedule, "analog schedules and swap counts")):
        s = sub.add_parser(name, parents=[common], formatter_class=fmt, help=help_)
        s.add_argument("--Q", type=int, default=8)
        s.add_argument("--Q-max", dest="Q_max", type=int, default=None, help="sweep Q..Q-max")
        s.add_argument("--verify", action="store_true", help="simulate and report fidelity")
        s.add_argument("--verify-max-q", type=int, default=10)
        s.set_defaults(func=func)
    sub.choices["compile"].add_argument("--dist", default="uniform")
    sub.choices["compile"].add_argument("--naive", action="store_true", help="skip the triangle rewrite")
    sub.choices["schedule"].add_argument("--c6", type=float, default=analog.DEFAULT_C6)
    sub.choices["schedule"].add_argument("--lambda0", type=float, default=None, help="default 4 x short spacing")

    s = sub.add_parser("trace", parents=[common], formatter_class=fmt, help="trace estimation trials")
    s.add_argument("--matrix", help="matrix file (header 'N <int>', rows 'i j re im')")
    s.add_argument("--Q", type=int, default=3)
    s.add_argument("--family", choices=states.FAMILIES, default="quantum")
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--dist", default="Z4")
    s.add_argument("--phase", choices=("uniform-phase", "rademacher"), default="uniform-phase")
    s.add_argument("--K", type=int, default=1000)
    s.add_argument("--trials", type=int, default=10)
    s.set_defaults(func=cmd_trace)

    s = sub.add_parser("fig1", parents=[common], formatter_class=fmt, help="identity-resolution heatmaps")
    s.add_argument("--Q", type=int, default=5)
    s.add_argument("--K", type=int, default=100)
    s.add_argument("--r", type=int, default=2)
    s.add_argument("--dist", default="Z4")
    s.add_argument("--Ks", default="100,1000,10000", help="comma list for the RMS decay")
    s.set_defaults(func=cmd_fig1)

    s = sub.add_parser("golomb", parents=[common], formatter_class=fmt, help="gap structure of G1/G2 spectra")
    s.add_argument("--Q-max", dest="Q_max", type=int, default=6)
    s.add_argument("--sigma", type=float, default=2.0, help="Fejer width for the bias check")
    s.set_defaults(func=cmd_golomb)

    s = sub.add_parser("lemma1", parents=[common], formatter_class=fmt,
                       help="exhaustive tensor-sum vs reordering check")
    s.add_argument("--Q", type=int, default=3)
    s.add_argument("--d", type=int, default=4)
    s.add_argument("--r", type=int, default=2)
    s.set_defaults(func=cmd_lemma1)
    # options without help text still show their defaults
    for sp in sub.choices.values():
        for a in sp._actions:
            if a.help is None and a.option_strings and a.default not in (None, False):
                a.help = "(default: %(default)s)"
    return p


def _apply_config(parser, argv):
    """Re-parse with config-file values as defaults so explicit flags still win."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = read_config(args.config)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions or key in ("help", "config", "func"):
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        a = actions[key]
        if isinstance(a, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            conv = a.type or str
            try:
                defaults[key] = conv(value)
            except ValueError:
                raise UsageError(f"bad value {value!r} for config key {key!r}") from None
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
