"""Regenerate src/graphqeq/data/default_model.bin.

The bundled weights are a 4-layer, 128-wide model fitted to the
table-teacher dataset (synthetic molecules labelled by per-element
electronegativity/hardness values run through QEq).  They demonstrate the
pipeline end to end; they are not fitted to any quantum-chemical charges.

    python scripts/build_default_model.py [--epochs N] [--molecules N]
"""

import argparse
from pathlib import Path

from graphqeq import gnn, train
from graphqeq.analysis import charge_rmse

OUT = Path(__file__).resolve().parents[1] / "src" / "graphqeq" / "data" / "default_model.bin"


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--molecules", type=int, default=1000)
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--seed", type=int, default=2024)
    args = parser.parse_args()

    dataset = train.make_teacher_dataset(args.molecules, seed=args.seed)
    config = gnn.ModelConfig(seed=args.seed)
    result = train.train_loop(
        dataset, config, train.TrainConfig(batch_size=32, epochs=args.epochs, seed=args.seed)
    )
    test = train.make_batch([dataset[i] for i in result.test_indices])
    predicted = train.predict(result.params, test.graph)
    print(f"best epoch {result.best_epoch}; held-out charge RMSE {charge_rmse(predicted, test.reference):.5f} e")
    OUT.write_bytes(gnn.save_model(result.params))
    print(f"wrote {OUT} ({OUT.stat().st_size} bytes, {result.params.n_parameters()} parameters)")


if __name__ == "__main__":
    main()
