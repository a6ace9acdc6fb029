"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 model error.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from graphqeq import errors, gnn
from graphqeq.molio import read_dataset, read_molecule_file, write_charge_file

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_MODEL = 0, 1, 2, 3
DEFAULT_SIZES = "10,30,100,300,1000"
SLOPE_BAND = (0.8, 1.3)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _DataError(Exception):
    """Wraps a data failure with the file it came from."""

    def __init__(self, path, exc):
        self.path = path
        self.exc = exc
        super().__init__(f"{path}: {exc}")


_DATA_ERRORS = (
    errors.ParseError,
    errors.UnsupportedElement,
    errors.DisconnectedMolecule,
    errors.PerceptionError,
    errors.InvalidArgument,
    errors.SingularHardness,
    OSError,
)


def _load_params(path):
    from graphqeq.pipeline import default_model, load_model_file

    try:
        return default_model() if path is None else load_model_file(path)
    except (errors.ModelError, OSError) as exc:
        raise errors.ModelError(f"cannot load model {path or '<bundled>'}: {exc}") from exc


def _read(path):
    try:
        return read_molecule_file(path)
    except _DATA_ERRORS as exc:
        raise _DataError(path, exc) from exc


def cmd_charge(args) -> int:
    from graphqeq.pipeline import charge_molecule

    mol = _read(args.input)
    params = _load_params(args.model)
    try:
        result = charge_molecule(mol, params)
    except _DATA_ERRORS as exc:
        raise _DataError(args.input, exc) from exc
    Path(args.output).write_text(write_charge_file(result))
    print(f"{args.input}: atoms={mol.n_atoms} Q={mol.net_charge} sum={result.charges.sum():.6f}")
    return EXIT_OK


def cmd_batch(args) -> int:
    from graphqeq.pipeline import charge_batch

    try:
        paths = [line.strip() for line in Path(args.input_list).read_text().splitlines() if line.strip()]
    except OSError as exc:
        raise _DataError(args.input_list, exc) from exc
    if not paths:
        raise _DataError(args.input_list, errors.InvalidArgument("input list is empty"))
    base = Path(args.input_list).parent
    paths = [p if Path(p).is_absolute() else str(base / p) for p in paths]
    mols = [_read(p) for p in paths]
    params = _load_params(args.model)

    t0 = time.perf_counter()
    try:
        results = charge_batch(mols, params)
    except _DATA_ERRORS as exc:
        raise _DataError(args.input_list, exc) from exc
    elapsed = time.perf_counter() - t0

    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    used = set()
    for k, (path, result) in enumerate(zip(paths, results)):
        stem = Path(path).stem
        if stem in used:
            stem = f"{stem}_{k}"
        used.add(stem)
        (outdir / f"{stem}.crg").write_text(write_charge_file(result))
    n_atoms = sum(m.n_atoms for m in mols)
    print(f"charged {len(mols)} molecules ({n_atoms} atoms) in {elapsed:.4f} s")
    return EXIT_OK


def cmd_train(args) -> int:
    from graphqeq.train import LabeledMolecule, TrainConfig, train_loop

    try:
        records = read_dataset(Path(args.data).read_text())
        dataset = [LabeledMolecule(mol, q) for mol, q in records]
        train_config = TrainConfig(
            learning_rate=args.learning_rate,
            l2_rate=args.l2_rate,
            batch_size=args.batch_size,
            epochs=args.epochs,
            seed=args.seed,
        )
    except _DATA_ERRORS as exc:
        raise _DataError(args.data, exc) from exc
    try:
        model_config = gnn.ModelConfig(
            hidden_width=args.hidden_width,
            n_layers=args.n_layers,
            readout_hidden_width=args.readout_width,
            aggregation=args.aggregation,
            seed=args.seed,
        )
    except errors.InvalidArgument as exc:
        raise UsageError(str(exc)) from exc
    try:
        result = train_loop(dataset, model_config, train_config)
    except _DATA_ERRORS as exc:
        raise _DataError(args.data, exc) from exc
    Path(args.out).write_bytes(gnn.save_model(result.params))
    history_path = args.history or f"{args.out}.history.csv"
    Path(history_path).write_text(result.history_csv())
    best = f" best epoch {result.best_epoch}" if result.best_epoch else ""
    print(f"trained on {len(result.train_indices)} molecules for {args.epochs} epochs;{best} -> {args.out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    from graphqeq.analysis import scaling_benchmark

    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--sizes must be comma-separated integers, got {args.sizes!r}") from None
    if not sizes or min(sizes) < 1 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise UsageError(f"--sizes must be strictly increasing positive integers, got {args.sizes!r}")
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    params = _load_params(args.model)
    result = scaling_benchmark(sizes, args.repeats, params, kind=args.kind, single_thread=not args.parallel)
    csv = result.to_csv()
    if args.csv:
        Path(args.csv).write_text(csv)
    verdict = "PASS" if SLOPE_BAND[0] <= result.slope <= SLOPE_BAND[1] else "FAIL"
    sys.stdout.write(csv)
    print(f"slope: {result.slope:.2f} {verdict}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="graphqeq", description="Total-charge-conserving partial charges from a GNN + QEq.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("charge", help="charge one MOL2/SDF molecule")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--model", default=None, help="weights file (default: bundled model)")
    p.set_defaults(func=cmd_charge)

    p = sub.add_parser("batch", help="charge many molecules in one batched pass")
    p.add_argument("--input-list", required=True, help="text file with one molecule path per line")
    p.add_argument("-o", "--output", required=True, help="output directory for .crg files")
    p.add_argument("--model", default=None)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("train", help="fit a model to a labelled SDF dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None, help="CSV path (default: <out>.history.csv)")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--learning-rate", type=float, default=1e-3)
    p.add_argument("--l2-rate", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=512)
    p.add_argument("--hidden-width", type=int, default=128)
    p.add_argument("--n-layers", type=int, default=4)
    p.add_argument("--readout-width", type=int, default=128)
    p.add_argument("--aggregation", choices=("mean", "sum"), default="mean")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("benchmark", help="wall time vs atom count on synthetic chains")
    p.add_argument("--sizes", default=DEFAULT_SIZES)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--model", default=None)
    p.add_argument("--kind", choices=("alkane", "pseudo_peptide"), default="alkane")
    p.add_argument("--csv", default=None, help="also write the table to this path")
    p.add_argument("--parallel", action="store_true", help="do not pin BLAS to one thread")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"graphqeq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except _DataError as exc:
        print(f"graphqeq: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except errors.ModelError as exc:
        print(f"graphqeq: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
