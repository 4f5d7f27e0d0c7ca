"""Regenerate the golden newform files under data/newforms/."""
import argparse
from pathlib import Path

from sqfree.modforms import builtin_newform, delta_record, eigenbasis, level1_basis
from sqfree.newform_io import save_newforms, standard_path

COUNT = 200


def golden_records(count: int = COUNT):
    yield delta_record(count)
    yield eigenbasis(level1_basis(24, count + 1))[0]
    yield builtin_newform("11a", count)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--root", default=Path(__file__).resolve().parent.parent / "data" / "newforms")
    ap.add_argument("--count", type=int, default=COUNT)
    args = ap.parse_args()
    for rec in golden_records(args.count):
        path = standard_path(args.root, rec.level, rec.weight, 1)
        save_newforms([rec], path)
        print(path)


if __name__ == "__main__":
    main()
