"""Write the bundled synthetic benchmark tables as CSV files.

Usage: python3 scripts/make_datasets.py [--out-dir data]
"""

import argparse
import os

from ffgp.data import make_cosine, make_smooth, make_surrogate, save_csv


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out-dir", default="data")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)

    X, y = make_surrogate()
    save_csv(
        os.path.join(args.out_dir, "surrogate.csv"),
        X, y, feature_names=[f"x{i + 1}" for i in range(X.shape[1])],
    )
    print(f"surrogate.csv: n={X.shape[0]} d={X.shape[1]}")

    X, y = make_cosine(n=500, freq=6.0, noise_std=0.1, seed=0)
    save_csv(os.path.join(args.out_dir, "cosine6.csv"), X, y, feature_names=["x"])
    print(f"cosine6.csv: n={X.shape[0]} d=1 (spectral peak at 6)")

    for n in (2000, 8000, 32000):
        X, y = make_smooth(n, d=4, seed=2)
        save_csv(
            os.path.join(args.out_dir, f"smooth_{n}.csv"),
            X, y, feature_names=[f"x{i + 1}" for i in range(4)],
        )
        print(f"smooth_{n}.csv: n={n} d=4")


if __name__ == "__main__":
    main()
