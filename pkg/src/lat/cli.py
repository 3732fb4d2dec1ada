"""Command-line interface: train, decode, merge, eval, bench-merge."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import _backend, bench
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .core import Piece, Vocabulary, build_vocab, decode_line, encode_line
from .decode import DecodeConfig, iterative_decode
from .merge import MergeConfig, merge_all
from .metrics import NrrConfig, bucket_report, corpus_bleu, length_edges, ngram_repeat_rate
from .model import Model, ModelConfig
from .training import DivergenceError, TrainConfig, train

log = logging.getLogger("lat")


class UsageError(Exception):
    """Bad input detected before work starts; exits with status 2."""


def _read_lines(path):
    if not os.path.isfile(path):
        raise UsageError(f"file not found: {path}")
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w", encoding="utf-8")


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; '#' starts a comment. Keys use dashes or underscores."""
    if not os.path.isfile(path):
        raise UsageError(f"file not found: {path}")
    out = {}
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{n}: expected key = value")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def vocab_path(checkpoint: str) -> str:
    return checkpoint + ".vocab"


# -- subcommands -----------------------------------------------------------

def cmd_train(args):
    src = _read_lines(args.src)
    tgt = _read_lines(args.tgt)
    if len(src) != len(tgt):
        raise UsageError(f"corpus length mismatch: {len(src)} source vs {len(tgt)} target lines")
    if not src:
        raise UsageError("empty corpus")
    vocab = build_vocab(src + tgt, args.min_count)
    pairs = [(encode_line(vocab, a), encode_line(vocab, b)) for a, b in zip(src, tgt)]
    too_long = [i + 1 for i, (a, b) in enumerate(pairs)
                if len(a) + 1 > args.max_len or len(b) > args.max_len]
    if too_long:
        raise UsageError(f"line {too_long[0]} exceeds --max-len {args.max_len}")
    mcfg = ModelConfig(vocab_size=len(vocab), d_model=args.d_model, heads=args.heads,
                       ffn_dim=args.ffn_dim, K=args.k, max_len=args.max_len, seed=args.seed)
    tcfg = TrainConfig(alpha=args.alpha, delete_frac=args.delete_frac,
                       delete_prob=args.delete_prob, lr=args.lr, batch_size=args.batch_size,
                       steps=args.steps, grad_clip=args.grad_clip, warmup=args.warmup,
                       seed=args.seed, log_every=args.log_every)
    model = Model(mcfg)
    try:
        trace = train(model, pairs, tcfg)
    except DivergenceError as exc:
        raise UsageError(str(exc)) from None
    save_checkpoint(model, args.out)
    vocab.save(vocab_path(args.out))
    loss_log = args.loss_log or args.out + ".loss.tsv"
    with open(loss_log, "w", encoding="utf-8") as f:
        f.write("step\tloss\n")
        for step, value in enumerate(trace, 1):
            f.write(f"{step}\t{value!r}\n")
    log.info("wrote %s (%d steps, final loss %.4f)", args.out, len(trace), trace[-1])


def _load_model(path):
    if not os.path.isfile(path):
        raise UsageError(f"file not found: {path}")
    try:
        model = load_checkpoint(path)
    except CheckpointError as exc:
        raise UsageError(f"{path}: {exc}") from None
    vpath = vocab_path(path)
    if not os.path.isfile(vpath):
        raise UsageError(f"file not found: {vpath}")
    vocab = Vocabulary.load(vpath)
    if len(vocab) != model.config.vocab_size:
        raise UsageError("vocabulary does not match checkpoint")
    return model, vocab


def cmd_decode(args):
    model, vocab = _load_model(args.checkpoint)
    lines = _read_lines(args.src)
    cfg = DecodeConfig(iterations=args.iterations, K=args.k, length_offset=args.length_offset,
                       seed=args.seed)
    sources = []
    for n, line in enumerate(lines, 1):
        ids = encode_line(vocab, line)
        if len(ids) + 1 > model.config.max_len:
            raise UsageError(f"line {n} exceeds the model's max length")
        sources.append(ids)

    def run(src):
        stats: dict = {}
        t0 = time.perf_counter()
        out = iterative_decode(model, src, cfg, stats=stats)
        return out, time.perf_counter() - t0, stats

    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as pool:
            results = list(pool.map(run, sources))
    else:
        results = [run(s) for s in sources]
    with _open_out(args.out) as f:
        for ids, _, _ in results:
            f.write(decode_line(vocab, ids) + "\n")
    if args.latency and results:
        total = sum(r[1] for r in results)
        print(f"latency_ms\t{1000 * total / len(results):.3f}\t{len(results)}", file=sys.stderr)
        for stage in ("model", "merge", "adjust"):
            sec = sum(r[2].get(stage, 0.0) for r in results)
            print(f"{stage}_ms\t{1000 * sec / len(results):.3f}\t{100 * sec / total:.1f}%",
                  file=sys.stderr)


def parse_piece_line(line: str, table: dict) -> list[Piece]:
    """One JSONL record -> pieces; token strings are interned into ``table``."""
    record = json.loads(line)
    pieces = []
    for anchor, raw in enumerate(record["pieces"]):
        ids = [table.setdefault(tok["t"], len(table)) for tok in raw]
        pieces.append(Piece.from_outputs(anchor, ids, [float(tok["s"]) for tok in raw]))
    return pieces


def cmd_merge(args):
    lines = _read_lines(args.pieces)
    cfg = MergeConfig(K=args.k)
    out = []
    for n, line in enumerate(lines, 1):
        if not line.strip():
            out.append("")
            continue
        # ids are offset past the reserved range so PAD/EOS stripping never fires
        table = {f"\0{i}": i for i in range(6)}
        try:
            pieces = parse_piece_line(line, table)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"{args.pieces}:{n}: malformed piece record ({exc})") from None
        if not pieces:
            log.warning("%s:%d: empty piece list", args.pieces, n)
            out.append("")
            continue
        words = {i: w for w, i in table.items()}
        out.append(" ".join(words[t.token] for t in merge_all(pieces, cfg)))
    with _open_out(args.out) as f:
        for line in out:
            f.write(line + "\n")


def cmd_eval(args):
    hyp = [line.split() for line in _read_lines(args.hyp)]
    ref = [line.split() for line in _read_lines(args.ref)]
    if len(hyp) != len(ref):
        raise UsageError(f"corpus length mismatch: {len(hyp)} hypotheses vs {len(ref)} references")
    rows = [("bleu", corpus_bleu(hyp, ref), len(hyp))]
    for n in range(1, 5):
        cfg = NrrConfig(n=n, window=args.nrr_window)
        count = sum(max(len(h) - n + 1, 0) for h in hyp)
        rows.append((f"nrr{n}", ngram_repeat_rate(hyp, cfg), count))
    if ref:
        edges = length_edges([len(r) for r in ref], args.buckets)
        for row in bucket_report(list(zip(ref, hyp)), edges):
            value = "n/a" if row["bleu"] is None else row["bleu"]
            rows.append((f"bleu_len[{row['lo']:g},{row['hi']:g})", value, row["count"]))
    with _open_out(args.out) as f:
        f.write("metric\tvalue\tcount\n")
        for name, value, count in rows:
            shown = value if isinstance(value, str) else f"{value:.4f}"
            f.write(f"{name}\t{shown}\t{count}\n")


def cmd_bench_merge(args):
    backends = {"default": [None], "both": ["python", "cython"]}.get(args.backend, [args.backend])
    try:
        for b in backends:
            _backend.get(b)
    except ImportError:
        raise UsageError("compiled kernels are not built") from None
    levels = ("api", "kernel") if args.level == "both" else (args.level,)
    rows = bench.run(sizes=args.sizes, ks=args.ks, backends=backends, levels=levels,
                     fixed_k=args.k, fixed_n=args.fixed_n, repeats=args.repeats, seed=args.seed)
    with _open_out(args.out) as f:
        f.write("backend\tlevel\tsweep\tn\tk\tseconds\tpieces_per_s\n")
        for r in rows:
            f.write(f"{r['backend']}\t{r['level']}\t{r['sweep']}\t{r['n']}\t{r['k']}\t"
                    f"{r['seconds']:.6f}\t{r['pieces_per_s']:.1f}\n")


# -- argument parsing --------------------------------------------------------

def _ints(text):
    return [int(x) for x in str(text).split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--config", help="flat key = value file; flags override it")
    shared.add_argument("--threads", type=int, default=1)
    shared.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lat", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = sub.choices

    p = sub.add_parser("train", parents=[shared], help="train the toy model")
    p.add_argument("--src", required=True)
    p.add_argument("--tgt", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--loss-log")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--d-model", type=int, default=32)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--ffn-dim", type=int, default=64)
    p.add_argument("--max-len", type=int, default=64)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--warmup", type=int, default=100)
    p.add_argument("--grad-clip", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--delete-frac", type=float, default=0.15)
    p.add_argument("--delete-prob", type=float, default=0.5)
    p.add_argument("--log-every", type=int, default=100)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", parents=[shared], help="translate a source file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--src", required=True)
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=None, help="local steps (default: model's K)")
    p.add_argument("--iterations", type=int, default=4)
    p.add_argument("--length-offset", type=int, default=0)
    p.add_argument("--latency", action="store_true")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("merge", parents=[shared], help="merge pieces from a JSONL file")
    p.add_argument("--pieces", required=True)
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("eval", parents=[shared], help="BLEU, repeat rates, length buckets")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out")
    p.add_argument("--nrr-window", type=int, default=None)
    p.add_argument("--buckets", type=int, default=5)
    p.add_argument("--k", type=int, default=3)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench-merge", parents=[shared], help="merge throughput")
    p.add_argument("--out")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--sizes", type=_ints, default=[1000, 2000, 4000, 8000])
    p.add_argument("--ks", type=_ints, default=[2, 3, 4, 5, 6])
    p.add_argument("--fixed-n", type=int, default=4000)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--backend", choices=["default", "python", "cython", "both"], default="default")
    p.add_argument("--level", choices=["api", "kernel", "both"], default="api")
    p.set_defaults(func=cmd_bench_merge)
    return parser


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        overrides = read_config_file(args.config)
        sub = parser.commands[args.command]
        actions = {a.dest: a for a in sub._actions}
        unknown = set(overrides) - set(actions)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        for key, value in overrides.items():
            if isinstance(actions[key], argparse._StoreTrueAction):
                overrides[key] = value.lower() in ("1", "true", "yes", "on")
        sub.set_defaults(**overrides)
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"lat: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    resolved = {k: v for k, v in vars(args).items() if k != "func"}
    log.info("config: %s", " ".join(f"{k}={v}" for k, v in sorted(resolved.items())))
    if args.threads < 1:
        print("lat: error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        args.func(args)
    except UsageError as exc:
        print(f"lat: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
