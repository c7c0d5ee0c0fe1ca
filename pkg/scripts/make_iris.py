#!/usr/bin/env python3
"""Regenerate datasets/iris.csv from scikit-learn's bundled copy.

Run from the repository root: python3 scripts/make_iris.py
"""

from pathlib import Path

from sklearn.datasets import load_iris

OUT = Path(__file__).resolve().parent.parent / "datasets" / "iris.csv"

HEADER = "sepal_length,sepal_width,petal_length,petal_width,species"


def main():
    iris = load_iris()
    names = [iris.target_names[t] for t in iris.target]
    lines = [HEADER]
    for row, name in zip(iris.data, names):
        lines.append(",".join(f"{v:g}" for v in row) + f",{name}")
    OUT.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {OUT} ({len(lines) - 1} rows)")


if __name__ == "__main__":
    main()
