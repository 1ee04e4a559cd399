"""Command-line harness: ``mbat {codebook,encode,query,capacity,learn,replay}``.

Every output starts with ``#`` header lines recording the tool version, the
effective configuration and the exact argument vector; ``mbat replay FILE``
re-runs the recorded command and reproduces the data bit for bit.
"""
from __future__ import annotations

import argparse
import csv
import io
import shlex
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import capacity as cap
from .binding import BindingOperator, make_binding, operators
from .core import Codebook, checksum, tag_symbol
from .errors import MBATError
from .query import ProbeResult, cooccur_score, decode_phrase, format_report, level_scores, read_word_count, word_count_scores
from .structure import SCHEMES, SEQUENCE_ROLE, count_tag, encode_sentence, parse_sentence_spec

DEFAULT_ROLES = (SEQUENCE_ROLE, "actor", "verb", "object")
FULL_SCALE_WORK = 2 * 10**10


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    dim: int = 1000
    seed: int = 1
    variant: str = "dense"
    norm: str = "unit"
    depth: int = 3
    fmt: str = "text"

    def header(self, command, argv):
        return [
            f"mbat {__version__} {command}",
            f"config: dim={self.dim} seed={self.seed} variant={self.variant} norm={self.norm} depth={self.depth}",
            "argv: " + shlex.join(argv),
        ]


# -- argument parsing ------------------------------------------------------


def _common():
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--dim", type=int, default=None, help="vector dimension D (default 1000, or the codebook's)")
    g.add_argument("--seed", type=int, default=None, help="master seed (default 1, or the codebook's)")
    g.add_argument("--variant", choices=["dense", "perm"], default=None)
    g.add_argument("--norm", choices=["none", "unit", "sqrtd", "binary"], default=None)
    g.add_argument("--depth", type=int, default=3, help="maximum quoting depth for probes")
    g.add_argument("--out", default=None, help="write data here instead of stdout")
    g.add_argument("--strict", action="store_true", help="reject symbols missing from the codebook")
    return p


def _sweep(text):
    """``200:1000:50`` (inclusive) or ``700,800,899``."""
    try:
        if ":" in text:
            parts = [int(x) for x in text.split(":")]
            start, stop = parts[0], parts[1]
            step = parts[2] if len(parts) > 2 else 1
            if step <= 0 or stop < start:
                raise ValueError
            return list(range(start, stop + 1, step))
        return [int(float(x)) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; use START:STOP[:STEP] or a comma list") from None


def build_parser():
    common = _common()
    p = argparse.ArgumentParser(prog="mbat", description="Matrix binding of additive terms: encoding, queries, capacity and learnability.")
    p.add_argument("--version", action="version", version=f"mbat {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("codebook", parents=[common], help="create or inspect a codebook file")
    c.add_argument("action", choices=["create", "inspect"])
    c.add_argument("path")
    c.add_argument("--symbols", nargs="*", default=[], help="symbols to list, in order")
    c.add_argument("--symbols-file", help="file with one symbol per line")
    c.add_argument("--roles", default=",".join(DEFAULT_ROLES), help="comma-separated binding roles to record")

    e = sub.add_parser("encode", parents=[common], help="encode a sentence")
    e.add_argument("codebook")
    e.add_argument("sentence", help='e.g. "@actor the smart girl | @verb saw | @object the gray elephant"')
    e.add_argument("--scheme", default="sequential", help=f"one of {', '.join(SCHEMES)}")
    e.add_argument("--full", action="store_true", help="also dump every component")
    e.add_argument("--no-count-tags", action="store_true")

    q = sub.add_parser("query", parents=[common], help="probe an encoded sentence")
    q.add_argument("codebook")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--sentence", help="encode this sentence and probe it")
    src.add_argument("--vector", help="file written by `mbat encode --full`")
    q.add_argument("--scheme", default="sequential")
    q.add_argument("--no-count-tags", action="store_true")
    q.add_argument(
        "--probe",
        action="append",
        required=True,
        help="member:WORD | cooccur:A,B | decode:LEVEL[:K] | count:LEVEL  (repeatable)",
    )

    k = sub.add_parser("capacity", parents=[common], help="analytic or simulated capacity sweeps (CSV)")
    k.add_argument("mode", choices=["analytic", "simulate"])
    k.add_argument("--D", dest="D", type=_sweep, default=None, help="dimensions, START:STOP[:STEP] or list")
    k.add_argument("--S", dest="S", type=_sweep, default=[20])
    k.add_argument("--N", dest="N", type=_sweep, default=[1000])
    k.add_argument("--q", type=float, default=0.01, help="error probability for Plate's bound")
    k.add_argument("--p", type=float, default=None, help="target error-free probability (default 1 - q)")
    k.add_argument("--trials", type=int, default=200)
    k.add_argument("--plot", default=None, help="also render a figure (png/svg/pdf)")
    k.add_argument("--checkpoint", default=None, help="per-cell results file; completed cells are reused")
    k.add_argument("--full-scale", action="store_true", help="allow Medium/Large-size simulations")

    lr = sub.add_parser("learn", parents=[common], help="perceptron learnability demo")
    lr.add_argument("--train", type=int, default=1000)
    lr.add_argument("--test", type=int, default=500)
    lr.add_argument("--epochs", type=int, default=100)
    lr.add_argument("--vocab", type=int, default=200)
    lr.add_argument("--pos", default="girl")
    lr.add_argument("--neg", default="elephant")

    r = sub.add_parser("replay", help="re-run the command recorded in an output header")
    r.add_argument("file")
    r.add_argument("--out", default=None)
    return p


# -- helpers ---------------------------------------------------------------


def _config(args, codebook: Codebook | None = None) -> RunConfig:
    dim = args.dim if args.dim is not None else (codebook.dimension if codebook else 1000)
    seed = args.seed if args.seed is not None else (codebook.master_seed if codebook else 1)
    return RunConfig(dim, seed, args.variant or "dense", args.norm or "unit", args.depth)


def _load_codebook(args) -> Codebook:
    path = Path(args.codebook)
    if not path.is_file():
        raise UsageError(f"cannot read codebook {path}")
    cb = Codebook.load(path, policy="reject" if args.strict else "derive")
    if args.dim is not None and args.dim != cb.dimension:
        raise UsageError(f"--dim {args.dim} disagrees with codebook dimension {cb.dimension}")
    return cb


def _bindings(cb: Codebook, args, roles) -> dict[str, BindingOperator]:
    """Codebook records first; missing roles are made from the global flags."""
    ops = operators(cb.bindings)
    cfg = _config(args, cb)
    out = {}
    for role in roles:
        op = ops.get(role) or make_binding(cfg.seed, role, cb.dimension, cfg.variant, cfg.norm)
        if args.norm:
            op = op.with_normalization(args.norm)
        out[role] = op
    for role, op in ops.items():
        out.setdefault(role, op.with_normalization(args.norm) if args.norm else op)
    return out


def _effective(cb, ops, args) -> RunConfig:
    m = ops.get(SEQUENCE_ROLE) or next(iter(ops.values()))
    return RunConfig(cb.dimension, cb.master_seed, m.variant, m.normalization, args.depth)


def _sentence_vector(cb, args):
    if args.scheme not in SCHEMES:
        raise UsageError(f"unknown scheme {args.scheme!r}; expected one of {', '.join(SCHEMES)}")
    spec = parse_sentence_spec(args.sentence, scheme=args.scheme, auto_count_tags=not args.no_count_tags)
    roles = [SEQUENCE_ROLE]
    for p in spec.phrases:
        named = [t for t in p.tags if not t.startswith("phraseHas")]
        if named and named[0] not in roles:
            roles.append(named[0])
    ops = _bindings(cb, args, roles)
    return spec, ops, encode_sentence(cb, ops, spec)


def _read_vector(path):
    comps = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("components="):
            comps = [float(x) for x in line.split("=", 1)[1].split(",")]
    if comps is None:
        raise UsageError(f"{path} has no components= line (write it with `mbat encode --full`)")
    return np.array(comps)


# -- commands --------------------------------------------------------------


def cmd_codebook(args, argv):
    if args.action == "create":
        symbols = list(args.symbols)
        if args.symbols_file:
            symbols += [s.strip() for s in Path(args.symbols_file).read_text(encoding="utf-8").splitlines() if s.strip()]
        cfg = _config(args)
        roles = [r for r in args.roles.split(",") if r]
        records = [make_binding(cfg.seed, r, cfg.dim, cfg.variant, cfg.norm).to_record() for r in roles]
        cb = Codebook(cfg.dim, cfg.seed, symbols, bindings=records)
        cb.save(args.path)
        lines = cfg.header("codebook create", argv)
        return "".join(f"# {h}\n" for h in lines) + f"path={args.path}\nsymbols={len(cb)}\nbindings={len(records)}\n"
    path = Path(args.path)
    if not path.is_file():
        raise UsageError(f"cannot read codebook {path}")
    cb = Codebook.load(path)
    cfg = _config(args, cb)
    out = io.StringIO()
    for h in cfg.header("codebook inspect", argv):
        out.write(f"# {h}\n")
    out.write(f"dimension={cb.dimension}\nmaster_seed={cb.master_seed}\nsymbols={len(cb)}\nbindings={len(cb.bindings)}\n")
    for rec in cb.bindings:
        out.write("binding\t" + "\t".join(f"{k}={rec[k]}" for k in sorted(rec)) + "\n")
    for s in cb.symbols:
        out.write(f"{s}\t{checksum(cb.vector(s))}\n")
    return out.getvalue()


def cmd_encode(args, argv):
    cb = _load_codebook(args)
    spec, ops, v = _sentence_vector(cb, args)
    cfg = _effective(cb, ops, args)
    out = io.StringIO()
    for h in cfg.header("encode", argv):
        out.write(f"# {h}\n")
    out.write(f"scheme={spec.scheme}\nphrases={len(spec.phrases)}\ndimension={v.size}\nchecksum={checksum(v)}\n")
    if args.full:
        out.write("components=" + ",".join(repr(float(x)) for x in v) + "\n")
    return out.getvalue()


def _probe(cb, ops, v, probe, depth) -> list[ProbeResult]:
    kind, _, rest = probe.partition(":")
    op = ops[SEQUENCE_ROLE]
    try:
        if kind == "member" and rest:
            rows = level_scores(op, cb.vector(rest), v, depth)
            return [ProbeResult(rest, r.score, r.level, r.decision) for r in rows]
        if kind == "cooccur" and rest.count(",") == 1:
            a, b = rest.split(",")
            score, level = cooccur_score(op, v, cb.vector(a), cb.vector(b), depth)
            return [ProbeResult(f"{a}+{b}", score, level)]
        if kind == "count" and rest:
            level = int(rest)
            scores = word_count_scores(cb, op, v, level, 8)
            k = int(np.argmax(scores)) + 1
            tag = cb.vector(tag_symbol(count_tag(k)))
            found = level_scores(op, tag, v, level)[level]
            return [ProbeResult(tag_symbol(count_tag(k)), found.score, level, found.decision)]
        if kind == "decode" and rest:
            parts = rest.split(":")
            level = int(parts[0])
            k = int(parts[1]) if len(parts) > 1 else read_word_count(cb, op, v, level, 8)
            words = decode_phrase(cb, op, v, level, k)
            return [ProbeResult(w, level_scores(op, cb.vector(w), v, level)[level].score, level) for w in words]
    except ValueError:
        pass
    raise UsageError(f"malformed probe {probe!r}")


def cmd_query(args, argv):
    cb = _load_codebook(args)
    if args.sentence is not None:
        spec, ops, v = _sentence_vector(cb, args)
        words = [w for p in spec.phrases for w in p.words]
        cb = cb.extend(w for w in words if w not in cb)
    else:
        v = _read_vector(args.vector)
        ops = _bindings(cb, args, [SEQUENCE_ROLE])
        if v.size != cb.dimension:
            raise UsageError(f"vector has {v.size} components, codebook has D={cb.dimension}")
    results = []
    for probe in args.probe:
        results += _probe(cb, ops, v, probe, args.depth)
    cfg = _effective(cb, ops, args)
    head = "".join(f"# {h}\n" for h in cfg.header("query", argv))
    return head + "# symbol\tscore\tlevel\tdecision\n" + format_report(results)


def _analytic_rows(args):
    rows = []
    for S in args.S:
        for N in args.N:
            target = 1 - args.q if args.p is None else args.p
            try:
                req = cap.required_dimension(S, N, target)
                status = "ok"
            except MBATError:
                req, status = None, "solver-limit"
            bound, floor = cap.plate_bound(S, N, args.q)
            for D in args.D or ([req] if req else [1]):
                lin, exact = cap.error_free_prob(D, S, N)
                rows.append(
                    {
                        "D": D, "S": S, "N": N, "q": args.q, "pTarget": target,
                        "Z": cap.z_value(D, S), "pairError": cap.pair_error(D, S),
                        "linearizedP": lin, "exactP": exact,
                        "requiredD": "" if req is None else req,
                        "plateBound": bound, "plateFloor": floor, "status": status,
                    }
                )
    return rows


ANALYTIC_COLUMNS = ["D", "S", "N", "q", "pTarget", "Z", "pairError", "linearizedP", "exactP", "requiredD", "plateBound", "plateFloor", "status"]


def _load_checkpoint(path):
    done = {}
    if path and Path(path).is_file():
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                key = (int(row["D"]), int(row["S"]), int(row["N"]), int(row["trials"]), int(row["seed"]))
                done[key] = row
    return done


def _simulate_rows(args, cfg):
    if not args.D:
        raise UsageError("simulate needs --D")
    cells = [(D, S, N) for S in args.S for N in args.N for D in args.D]
    work = sum((S + N) * D for D, S, N in cells) * args.trials
    if work > FULL_SCALE_WORK and not args.full_scale:
        raise UsageError("this sweep is Medium/Large scale (hours); pass --full-scale to run it")
    done = _load_checkpoint(args.checkpoint)
    rows = []
    for D, S, N in cells:
        key = (D, S, N, args.trials, cfg.seed)
        if key in done:
            r = done[key]
            row = {c: r[c] for c in cap.CSV_COLUMNS}
            for c in ("fracBundledInTopS", "fracErrorFreeTrials", "linearizedP", "exactP"):
                row[c] = float(row[c])
        else:
            res = cap.simulate_capacity(cap.CapacityParams(D, S, N), args.trials, cfg.seed)
            row = cap.simulation_row(res)
            if args.checkpoint:
                path = Path(args.checkpoint)
                fresh = not path.is_file() or path.stat().st_size == 0
                with open(path, "a", encoding="utf-8") as fh:
                    if fresh:
                        fh.write(",".join(cap.CSV_COLUMNS) + "\n")
                    cap.write_csv([row], stream=_NoHeader(fh))
        rows.append(row)
    return rows


class _NoHeader:
    """File wrapper that drops the CSV header line written by ``write_csv``."""

    def __init__(self, fh):
        self.fh = fh
        self.skipped = False

    def write(self, s):
        if not self.skipped:
            self.skipped = True
            return
        self.fh.write(s)


def cmd_capacity(args, argv):
    cfg = _config(args)
    head = cfg.header(f"capacity {args.mode}", argv)
    if args.mode == "analytic":
        rows = _analytic_rows(args)
        text = cap.write_csv(rows, ANALYTIC_COLUMNS, header_lines=head)
        if args.plot and args.D:
            from .plotting import plot_analytic

            plot_analytic(rows, args.plot)
        return text
    rows = _simulate_rows(args, cfg)
    text = cap.write_csv(rows, header_lines=head)
    if args.plot:
        from .plotting import plot_simulation

        plot_simulation(rows, args.plot)
    return text


def cmd_learn(args, argv):
    from .learn import run_demo

    cfg = _config(args)
    vocab = [args.pos, args.neg] + [f"w{i}" for i in range(max(0, args.vocab - 2))]
    cb = Codebook(cfg.dim, cfg.seed, vocab)
    op = make_binding(cfg.seed, SEQUENCE_ROLE, cfg.dim, cfg.variant, cfg.norm)
    report, _ = run_demo(cb, op, vocab, args.pos, args.neg, args.train, args.test, args.epochs, cfg.seed)
    head = "".join(f"# {h}\n" for h in cfg.header("learn", argv))
    return head + report.to_text()


def cmd_replay(args, argv):
    text = Path(args.file).read_text(encoding="utf-8")
    for line in text.splitlines():
        if line.startswith("# argv: "):
            recorded = shlex.split(line[len("# argv: "):])
            recorded = _strip_out(recorded)
            parsed = build_parser().parse_args(recorded)
            return COMMANDS[parsed.command](parsed, recorded)
    raise UsageError(f"{args.file} has no recorded argv header")


def _strip_out(argv):
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
        elif a == "--out":
            skip = True
        elif not a.startswith("--out="):
            out.append(a)
    return out


COMMANDS = {
    "codebook": cmd_codebook,
    "encode": cmd_encode,
    "query": cmd_query,
    "capacity": cmd_capacity,
    "learn": cmd_learn,
    "replay": cmd_replay,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    recorded = _strip_out(argv)
    try:
        text = COMMANDS[args.command](args, recorded)
    except UsageError as exc:
        print(f"mbat: usage error: {exc}", file=sys.stderr)
        return 2
    except (MBATError, OSError) as exc:
        print(f"mbat: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
