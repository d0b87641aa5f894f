"""Command-line front end.

Exit codes: 0 success, 2 bad input (argument or file syntax), 3 kernel not
invertible over GF(2), 4 permutation search overflowed its candidate cap.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .cost import EMPTY_WINDOW_RULES, kernel_cost
from .gf2 import BitMatrix, SingularMatrix
from .kernelalg import (
    InvalidPermutation,
    Kernel,
    error_exponent,
    from_one_based,
    is_polarizing,
    permute_columns,
    to_one_based,
    window_profile,
)
from .permsearch import DEFAULT_CAP, BeamOverflow, search, select_best
from .simlab import (
    ChannelConfig,
    DecoderConfig,
    StopRule,
    monte_carlo_reliability,
    run_fer,
    select_frozen,
    write_csv,
)
from .windec import PolarCodeSpec

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_SINGULAR = 3
EXIT_OVERFLOW = 4


class ParseError(ValueError):
    def __init__(self, source: str, line: int | None, msg: str):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {msg}")
        self.line = line


# ------------------------------------------------------------------ file formats

@dataclass
class KernelFile:
    l: int
    rows: list[str]
    name: str = ""

    def kernel(self) -> Kernel:
        return Kernel(BitMatrix.from_strings(self.rows), self.name)


def parse_kernel_text(text: str, source: str = "<kernel>") -> KernelFile:
    """Header line ``l`` then ``l`` rows of 0/1; ``# name: X`` comments allowed."""
    name = ""
    l = None
    rows: list[str] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.lower().startswith("name:"):
                name = body[5:].strip()
            continue
        if l is None:
            try:
                l = int(line)
            except ValueError:
                raise ParseError(source, lineno, f"expected kernel size, got {line!r}") from None
            if l < 2 or l & (l - 1):
                raise ParseError(source, lineno, f"kernel size must be a power of two >= 2, got {l}")
            continue
        if len(rows) == l:
            raise ParseError(source, lineno, f"more than {l} matrix rows")
        if len(line) != l or set(line) - {"0", "1"}:
            raise ParseError(source, lineno, f"row must be {l} characters from {{0,1}}, got {line!r}")
        rows.append(line)
    if l is None:
        raise ParseError(source, None, "empty kernel file")
    if len(rows) != l:
        raise ParseError(source, None, f"expected {l} rows, found {len(rows)}")
    return KernelFile(l, rows, name)


def serialize_kernel(k: Kernel) -> str:
    head = f"# name: {k.name}\n" if k.name else ""
    return head + f"{k.l}\n" + "".join(r + "\n" for r in k.matrix.to_strings())


def load_kernel(spec: str) -> Kernel:
    """Load a kernel file, or build one from ``arikan:<l>``."""
    if spec.startswith("arikan:"):
        try:
            l = int(spec.split(":", 1)[1])
            return Kernel.arikan(l)
        except ValueError as exc:
            raise ParseError(spec, None, str(exc)) from None
    path = Path(spec)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(spec, None, f"cannot read file ({exc.strerror})") from None
    kf = parse_kernel_text(text, spec)
    if not kf.name:
        kf.name = path.stem
    return kf.kernel()


def parse_permutations(text: str, l: int | None = None, source: str = "<permutation>") -> list[tuple[int, ...]]:
    """One comma-separated 1-based permutation per line; returns 0-based tuples."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            pi = from_one_based(int(x) for x in line.split(","))
        except (ValueError, InvalidPermutation) as exc:
            raise ParseError(source, lineno, f"not a 1-based permutation: {exc}") from None
        if l is not None and len(pi) != l:
            raise ParseError(source, lineno, f"permutation has {len(pi)} entries, kernel has {l} columns")
        out.append(pi)
    if not out:
        raise ParseError(source, None, "no permutation found")
    return out


def format_permutation(pi: Sequence[int]) -> str:
    return ",".join(str(p) for p in to_one_based(pi))


def _read_permutation_arg(arg: str, l: int) -> list[tuple[int, ...]]:
    path = Path(arg)
    if path.is_file():
        return parse_permutations(path.read_text(), l, arg)
    return parse_permutations(arg, l, "--permutation")


# ------------------------------------------------------------------ commands

def _profile_report(k: Kernel, empty_window: str, out) -> None:
    prof = window_profile(k)
    cost = kernel_cost(prof, empty_window)
    print(f"# kernel: {k.name or '-'} (l={k.l})", file=out)
    print(f"# polarizing: {'yes' if is_polarizing(k) else 'no'}", file=out)
    if k.l <= 16:
        print(f"# error exponent: {error_exponent(k):.6f}", file=out)
    print(f"{'i':>3} {'h_i':>4} {'|D_i|':>5} {'AC_i':>12}", file=out)
    for i in range(k.l):
        print(f"{i:>3} {prof.h[i]:>4} {prof.window_sizes[i]:>5} {cost.per_phase[i]:>12}", file=out)
    print(f"total {cost.total}", file=out)


def cmd_kernel_profile(args, out) -> int:
    k = load_kernel(args.kernel)
    if args.permutation is None:
        _profile_report(k, args.empty_window, out)
        return EXIT_OK
    for n, pi in enumerate(_read_permutation_arg(args.permutation, k.l)):
        if n:
            print(file=out)
        print(f"# permutation: {format_permutation(pi)}", file=out)
        _profile_report(permute_columns(k, pi), args.empty_window, out)
    return EXIT_OK


def cmd_permsearch(args, out) -> int:
    k = load_kernel(args.kernel)
    threshold = None if args.threshold == "auto" else int(args.threshold)
    result = search(k, threshold, args.cap)
    best, _, ranked = select_best(k, result.candidates, args.empty_window)
    print(f"# kernel: {k.name or '-'} (l={k.l})", file=out)
    print(f"# threshold: {result.threshold} (initial {result.initial_threshold})", file=out)
    print(f"# survivors: {len(ranked)}", file=out)
    shown = ranked if args.all else [best]
    for c in shown:
        print(f"{format_permutation(c.permutation)}\tmetric={c.metric}\tcost={c.cost}", file=out)
    return EXIT_OK


def _parse_snrs(text: str) -> list[float]:
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad SNR list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty SNR list")
    return vals


def cmd_simulate_fer(args, out) -> int:
    k = load_kernel(args.kernel)
    N = k.l ** args.n
    if not 0 < args.k <= N:
        raise ParseError("--k", None, f"must lie in [1, {N}], got {args.k}")
    rate = args.k / N
    design = min(args.snr) if args.design_snr is None else args.design_snr
    counts = monte_carlo_reliability(k, args.n, design, args.construct_trials, args.seed, rate)
    spec = PolarCodeSpec(k, args.n, select_frozen(counts, args.k))
    decoder = DecoderConfig(args.decoder, args.list)
    stop = StopRule(args.max_trials, args.target_errors)
    reports = [
        run_fer(spec, decoder, ChannelConfig(snr, rate, args.seed), stop, args.batch_size, args.workers)
        for snr in args.snr
    ]
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(reports, fh)
    else:
        write_csv(reports, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lkpolar", description="Large-kernel polar code tools")
    sub = p.add_subparsers(dest="command", required=True)

    kp = sub.add_parser("kernel", help="kernel inspection")
    ksub = kp.add_subparsers(dest="kernel_command", required=True)
    prof = ksub.add_parser("profile", help="per-phase window sizes and decoding cost")
    prof.add_argument("kernel", help="kernel file or arikan:<l>")
    prof.add_argument("--permutation", help="1-based column permutation, inline or a file")
    prof.add_argument("--empty-window", choices=EMPTY_WINDOW_RULES, default="arikan")
    prof.set_defaults(func=cmd_kernel_profile)

    ps = sub.add_parser("permsearch", help="search for cheap column permutations")
    ps.add_argument("kernel")
    ps.add_argument("--threshold", default="auto", help="'auto' or a non-negative integer")
    ps.add_argument("--cap", type=int, default=DEFAULT_CAP, help="maximum live candidates")
    ps.add_argument("--all", action="store_true", help="list every survivor")
    ps.add_argument("--empty-window", choices=EMPTY_WINDOW_RULES, default="arikan")
    ps.set_defaults(func=cmd_permsearch)

    sp = sub.add_parser("simulate", help="Monte-Carlo simulation")
    ssub = sp.add_subparsers(dest="sim_command", required=True)
    fer = ssub.add_parser("fer", help="frame error rate sweep over AWGN/BPSK")
    fer.add_argument("kernel")
    fer.add_argument("--n", type=int, required=True, help="number of kernel levels")
    fer.add_argument("--k", type=int, required=True, help="information bits")
    fer.add_argument("--snr", type=_parse_snrs, required=True, help="comma-separated Eb/N0 values in dB")
    fer.add_argument("--decoder", choices=("sc", "scl"), default="sc")
    fer.add_argument("--list", type=int, default=1, help="list size for scl")
    fer.add_argument("--seed", type=int, default=0)
    fer.add_argument("--construct-trials", type=int, default=10**5)
    fer.add_argument("--design-snr", type=float, default=None, help="defaults to the lowest --snr")
    fer.add_argument("--max-trials", type=int, default=10**5)
    fer.add_argument("--target-errors", type=int, default=100)
    fer.add_argument("--batch-size", type=int, default=1000)
    fer.add_argument("--workers", type=int, default=1)
    fer.add_argument("--out", help="CSV path (default stdout)")
    fer.set_defaults(func=cmd_simulate_fer)
    return p


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    if args.command == "permsearch" and args.threshold != "auto":
        if not args.threshold.isdigit():
            print("error: --threshold must be 'auto' or a non-negative integer", file=sys.stderr)
            return EXIT_PARSE
    try:
        return args.func(args, out)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SingularMatrix as exc:
        print(f"error: {args.kernel}: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except BeamOverflow as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OVERFLOW
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
