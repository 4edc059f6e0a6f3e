"""``cermet`` command line.

Exit status: 0 success, 1 usage, 2 data or parse error, 3 timeout,
4 audit leak or perf regression.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import os
import sys
from pathlib import Path

from . import ciphers
from .audit import (
    CiphertextPolicy,
    EavesdropperModel,
    all_subsets_audit,
    sampled_audit,
)
from .ciphers import CipherSuiteId, KeyPair
from .codec import DEFAULT_WINDOW, CodecConfig, decode_stream, encode_stream
from .errors import CermetError, MissingChannel
from .frame import HEADER_LEN, parse_header
from .gf import FieldSpec
from .mrd import SecrecyCode
from . import perf
from .transport import parse_address, recv_stream, send_stream

log = logging.getLogger("cermet")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TIMEOUT, EXIT_FAIL = 0, 1, 2, 3, 4

DEFAULTS = {
    "m": 16,
    "n": 4,
    "c": 1,
    "suite": "aes256_ctr",
    "k_in": None,
    "poly": None,
    "key": [],
    "peer": [],
    "listen": [],
    "timeout": 30.0,
    "window": DEFAULT_WINDOW,
}
LIST_KEYS = {"key", "peer", "listen"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def load_config(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment. List keys take
    comma-separated values."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in DEFAULTS:
                raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
            out[key] = [v.strip() for v in value.split(",") if v.strip()] if key in LIST_KEYS else value
    return out


def resolve(args) -> dict:
    """Merge flags over the config file over defaults."""
    cfg_path = getattr(args, "config", None) or os.environ.get("CERMET_CONFIG")
    merged = dict(DEFAULTS)
    if cfg_path:
        merged.update(load_config(cfg_path))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None and val != []:
            merged[key] = val
    for key in ("m", "n", "c", "window"):
        merged[key] = int(merged[key])
    for key in ("k_in", "poly"):
        if merged[key] is not None:
            merged[key] = int(str(merged[key]), 0)
    merged["timeout"] = float(merged["timeout"])
    merged["suite"] = CipherSuiteId.parse(merged["suite"])
    return merged


def _load_keys(paths, suite: CipherSuiteId, c: int, secret: bool) -> list | None:
    if suite is CipherSuiteId.NULL:
        return None
    if len(paths) != c:
        raise UsageError(f"{suite.name} with c={c} needs {c} --key files, got {len(paths)}")
    keys = []
    for p in paths:
        kind, raw = ciphers.read_key_file(p)
        if kind != suite:
            raise ciphers.SuiteMismatch(f"{p} holds a {kind.name} key, session uses {suite.name}")
        if secret:
            keys.append(KeyPair.from_secret(kind, raw))
        elif str(p).endswith(".pub"):
            keys.append(KeyPair.from_public(kind, raw))
        else:
            keys.append(KeyPair.from_public(kind, KeyPair.from_secret(kind, raw).public_key))
    return keys


def _session(s: dict, secret: bool) -> CodecConfig:
    keys = _load_keys(s["key"], s["suite"], s["c"], secret)
    return CodecConfig.create(
        s["n"], m=s["m"], suite=s["suite"], c=s["c"], keys=keys, k_in=s["k_in"], poly=s["poly"]
    )


def _addresses(values) -> list:
    out = []
    for v in values:
        out.extend(parse_address(x) for x in str(v).split(",") if x.strip())
    return out


# -- subcommands --------------------------------------------------------------

def cmd_keygen(args) -> int:
    suite = CipherSuiteId.parse(args.suite)
    if suite is CipherSuiteId.NULL:
        raise UsageError("the NULL suite has no keys")
    paths = []
    for i in range(args.count):
        out = args.out if args.count == 1 else f"{args.out}.{i}"
        paths.extend(ciphers.save_keypair(ciphers.gen(suite), out))
    for p in paths:
        print(p)
    return EXIT_OK


def channel_path(outdir: Path, i: int) -> Path:
    return outdir / f"ch{i:02d}.cmt"


def cmd_encode(args) -> int:
    s = resolve(args)
    cfg = _session(s, secret=False)
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = [open(channel_path(outdir, i), "wb") for i in range(cfg.n)]
    try:
        with open(args.input, "rb") as src:
            count = encode_stream(src, cfg, files)
    finally:
        for f in files:
            f.close()
    log.info("wrote %d batches to %d channel files in %s", count, cfg.n, outdir)
    return EXIT_OK


def _peek(path) -> tuple:
    with open(path, "rb") as f:
        head = f.read(HEADER_LEN)
    if not head:
        return None
    return parse_header(head)


def _infer_from_frames(paths, s: dict, args) -> dict:
    """Take m, n, c and suite from the frames unless given explicitly."""
    heads = [h for h in (_peek(p) for p in paths) if h is not None]
    if not heads:
        raise MissingChannel(range(s["n"]))
    m, n, c, _, _, suite, _, _ = heads[0]
    explicit = {k for k in ("m", "n", "c", "suite") if getattr(args, k, None) is not None}
    file_cfg = load_config(args.config or os.environ["CERMET_CONFIG"]) if (
        args.config or os.environ.get("CERMET_CONFIG")) else {}
    explicit |= set(file_cfg) & {"m", "n", "c", "suite"}
    inferred = {"m": m, "n": n, "c": c, "suite": CipherSuiteId(suite)}
    for key, val in inferred.items():
        if key not in explicit:
            s[key] = val
    if s["k_in"] is None:
        _, _, _, _, enc, _, _, plen = heads[0]
        s["k_in"] = 8 * (plen - (ciphers.NONCE_LEN[s["suite"]] if enc else 0))
    return s


def cmd_decode(args) -> int:
    paths = []
    for item in args.inputs:
        p = Path(item)
        paths.extend(sorted(p.glob("*.cmt")) if p.is_dir() else [p])
    if not paths:
        raise MissingChannel(range(args.n or DEFAULTS["n"]))
    s = _infer_from_frames(paths, resolve(args), args)
    cfg = _session(s, secret=True)
    readers = [open(p, "rb") for p in paths]
    try:
        with open(args.out, "wb") as dst:
            count = decode_stream(readers, cfg, dst, window=s["window"])
    finally:
        for r in readers:
            r.close()
    log.info("decoded %d batches into %s", count, args.out)
    return EXIT_OK


def cmd_send(args) -> int:
    s = resolve(args)
    cfg = _session(s, secret=False)
    peers = _addresses(s["peer"])
    with open(args.input, "rb") as src:
        send_stream(src, cfg, peers, timeout=s["timeout"])
    return EXIT_OK


def cmd_recv(args) -> int:
    s = resolve(args)
    cfg = _session(s, secret=True)
    listen = _addresses(s["listen"])
    with open(args.out, "wb") as dst:
        recv_stream(cfg, listen, dst, timeout=s["timeout"], window=s["window"])
    return EXIT_OK


def cmd_audit(args) -> int:
    spec = FieldSpec(args.m, int(args.poly, 0) if args.poly else None)
    code = SecrecyCode.identity(args.n, spec) if args.code == "identity" else SecrecyCode.default(args.n, spec)
    max_w = args.n - 1 if args.max_w is None else args.max_w
    policy = CiphertextPolicy(args.policy)
    encrypted = frozenset(range(args.c))
    if args.mode == "exhaustive":
        rep = all_subsets_audit(code, max_w, policy, encrypted)
        result = {
            "mode": "exhaustive",
            "m": args.m, "n": args.n, "max_w": max_w, "code": args.code,
            "tv": list(rep.tv), "mutual_information_bits": list(rep.mutual_information),
            "worst_subset": [list(s) for s in rep.worst_subset],
            "worst_tv": rep.worst_tv,
            "worst_tv_by_size": {str(k): v for k, v in rep.by_size.items()},
            "leak": rep.worst_tv > 0,
        }
    else:
        # by monotonicity the largest subsets are the strongest observers
        rows = []
        for subset in itertools.combinations(range(args.n), max_w):
            r = sampled_audit(code, EavesdropperModel(subset, policy, encrypted), args.samples, seed=args.seed)
            rows.append({"subset": list(subset), "tv": list(r.tv), "stderr": list(r.stderr), "flags": list(r.flags)})
        leak = any(any(r["flags"]) for r in rows)
        result = {
            "mode": "sampled", "m": args.m, "n": args.n, "max_w": max_w, "code": args.code,
            "samples": args.samples, "subsets": rows,
            "worst_tv": max((max(r["tv"]) for r in rows), default=0.0), "leak": leak,
        }
    if args.json:
        print(json.dumps(result, indent=2))
    else:
        print(f"{result['mode']} audit  GF(2^{args.m})  n={args.n}  code={args.code}  max_w={max_w}")
        if args.mode == "exhaustive":
            for j, (tv, mi) in enumerate(zip(rep.tv, rep.mutual_information)):
                print(f"  M_{j}: worst TV {tv:.6f}  MI {mi:.4f} bits  subset {list(rep.worst_subset[j])}")
        else:
            for row in result["subsets"]:
                marks = "".join("!" if f else "." for f in row["flags"])
                print(f"  observe {row['subset']}: max TV excess {max(row['tv']):.5f}  flags {marks}")
        print(f"worst TV {result['worst_tv']:.6f}  {'LEAK' if result['leak'] else 'ok'}")
    return EXIT_FAIL if result["leak"] else EXIT_OK


def parse_range(text: str) -> list:
    out = []
    for part in text.split(","):
        lo, sep, hi = part.partition("..")
        out.extend(range(int(lo), int(hi) + 1) if sep else [int(lo)])
    if not out or min(out) < 1:
        raise UsageError(f"bad channel range {text!r}")
    return out


def _print_rows(rows, cols):
    print("  ".join(f"{c:>14}" for c in cols))
    for r in rows:
        cells = []
        for c in cols:
            v = r[c]
            cells.append(f"{v:>14.4f}" if isinstance(v, float) else f"{str(v):>14}")
        print("  ".join(cells))


def cmd_perf(args) -> int:
    mode = perf.MultiplierMode.SERIAL if args.serial else perf.MultiplierMode.PARALLEL
    store = not args.unpipelined_store
    failed = False
    if args.table == "table1":
        base = perf.PipelineParams.aes256(2, multiplier_mode=mode, store_pipelined=store)
        rows = perf.reproduce_table1(base)
        extra = {"baseline": perf.table1_baseline()}
        cols = ["n", "throughput_gbps", "reported_gbps", "bottleneck", "energy_pj_per_bit",
                "reported_pj_per_bit", "energy_rel_err", "pass"]
        failed = not all(r["pass"] for r in rows)
    elif args.table == "table3":
        rows = perf.reproduce_table3(args.ecc_cycles)
        extra = {"ecc_cycles": args.ecc_cycles}
        cols = ["row", "throughput_kbps", "multiplier_cycles", "energy_pj_per_bit",
                "reported_pj_per_bit", "energy_rel_err", "pass"]
        failed = not all(r["pass"] for r in rows)
    else:
        base = perf.PipelineParams.aes256(1, multiplier_mode=mode, store_pipelined=store)
        rows = perf.sweep(parse_range(args.n), base)
        extra = {}
        cols = ["n", "throughput_gbps", "baseline_gbps", "bottleneck", "cycles_per_batch"]
    if args.json:
        print(json.dumps({"table": args.table, "rows": rows, **extra, "pass": not failed}, indent=2))
    else:
        _print_rows(rows, cols)
        if "baseline" in extra:
            b = extra["baseline"]
            print(f"baseline: {b['throughput_gbps_per_channel']:.4f} Gbps/ch, "
                  f"{b['energy_pj_per_bit']:.4f} pJ/bit (reported {b['reported_pj_per_bit']})")
    return EXIT_FAIL if failed else EXIT_OK


# -- parser -------------------------------------------------------------------

def _session_flags(p):
    p.add_argument("--config", help="key=value config file (default: $CERMET_CONFIG)")
    p.add_argument("--m", type=int, help="field degree (default 16)")
    p.add_argument("--n", type=int, help="channel count")
    p.add_argument("--c", type=int, help="encrypted channel count")
    p.add_argument("--suite", help="null | aes256_ctr | x25519_hybrid")
    p.add_argument("--k-in", dest="k_in", help="crypto input width in bits")
    p.add_argument("--poly", help="reduction polynomial, e.g. 0x1100B")
    p.add_argument("--key", action="append", default=[], help="key file, once per encrypted channel")
    p.add_argument("--timeout", type=float, help="network timeout in seconds")
    p.add_argument("--window", type=int, help="reassembly window in batches")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cermet", description="Hybrid secrecy-coded multipath encryption.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("keygen", help="generate a key pair (writes PATH and PATH.pub)")
    p.add_argument("--suite", default="aes256_ctr")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=1, help="number of key pairs (PATH.0, PATH.1, ...)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("encode", help="encode a file into n channel files")
    p.add_argument("input")
    p.add_argument("--out-dir", required=True)
    _session_flags(p)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode channel files (any order) back into a file")
    p.add_argument("inputs", nargs="+", help="channel files or a directory of *.cmt files")
    p.add_argument("--out", required=True)
    _session_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("send", help="encode a file and send channel i to peer i")
    p.add_argument("input")
    p.add_argument("--peer", action="append", default=[], help="host:port, once per channel")
    _session_flags(p)
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("recv", help="listen on n addresses and decode")
    p.add_argument("--listen", action="append", default=[], help="host:port, once per channel")
    p.add_argument("--out", required=True)
    _session_flags(p)
    p.set_defaults(func=cmd_recv)

    p = sub.add_parser("audit", help="individual-secrecy audit of the code")
    p.add_argument("--m", type=int, default=4)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--c", type=int, default=1)
    p.add_argument("--poly")
    p.add_argument("--max-w", dest="max_w", type=int)
    p.add_argument("--mode", choices=["exhaustive", "sampled"], default="exhaustive")
    p.add_argument("--code", choices=["mrd", "identity"], default="mrd")
    p.add_argument("--policy", choices=["transparent", "opaque"], default="transparent")
    p.add_argument("--samples", type=int, default=20_000)
    p.add_argument("--seed", type=int)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("perf", help="throughput and energy model")
    p.add_argument("table", choices=["table1", "table3", "sweep"])
    p.add_argument("--n", default="2..32", help="channel range for sweep, e.g. 2..32")
    p.add_argument("--ecc-cycles", type=int, default=perf.ECC_CYCLES)
    p.add_argument("--serial", action="store_true", help="serial multiplier")
    p.add_argument("--unpipelined-store", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_perf)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"cermet: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TimeoutError as exc:
        print(f"cermet: timeout: {exc}", file=sys.stderr)
        return EXIT_TIMEOUT
    except (CermetError, ValueError, OSError) as exc:
        print(f"cermet: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
