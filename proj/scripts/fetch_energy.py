#!/usr/bin/env python3
"""Download the UCI Energy Efficiency data and write it as data/energy.csv."""

import argparse
import io
import pathlib
import urllib.request

import pandas as pd

URL = "https://archive.ics.uci.edu/ml/machine-learning-databases/00242/ENB2012_data.xlsx"


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path(__file__).resolve().parent.parent / "data" / "energy.csv")
    parser.add_argument("--url", default=URL)
    args = parser.parse_args()

    with urllib.request.urlopen(args.url, timeout=60) as resp:
        frame = pd.read_excel(io.BytesIO(resp.read()))
    frame = frame.dropna(how="all").dropna(axis=1, how="all")
    expected = [f"X{i}" for i in range(1, 9)] + ["Y1", "Y2"]
    missing = [c for c in expected if c not in frame.columns]
    if missing:
        raise SystemExit(f"unexpected columns, missing {missing}")
    args.out.parent.mkdir(parents=True, exist_ok=True)
    frame[expected].to_csv(args.out, index=False)
    print(f"wrote {len(frame)} rows to {args.out}")


if __name__ == "__main__":
    main()
