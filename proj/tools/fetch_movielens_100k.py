#!/usr/bin/env python3
"""Fetch MovieLens 100K and write it in the MovieLens 1M `::` layout.

GroupLens' own host is not always reachable, so this pulls the copy bundled
inside the RecBole wheel on PyPI and converts it:

    data/ml-100k/ratings.dat   UserID::MovieID::Rating::Timestamp
    data/ml-100k/movies.dat    MovieID::Title::Genre1|Genre2
"""
import argparse
import glob
import os
import subprocess
import sys
import tempfile
import zipfile

PREFIX = "recbole/dataset_example/ml-100k/"


def find_wheel(workdir):
    subprocess.check_call([sys.executable, "-m", "pip", "download", "--no-deps",
                           "--quiet", "-d", workdir, "recbole==1.2.1"])
    wheels = glob.glob(os.path.join(workdir, "recbole-*.whl"))
    if not wheels:
        sys.exit("recbole wheel not found after download")
    return wheels[0]


def convert(wheel, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with zipfile.ZipFile(wheel) as z:
        inter = z.read(PREFIX + "ml-100k.inter").decode("latin-1").splitlines()
        items = z.read(PREFIX + "ml-100k.item").decode("latin-1").splitlines()

    with open(os.path.join(out_dir, "ratings.dat"), "w", newline="\n") as f:
        for line in inter[1:]:
            user, item, rating, ts = line.split("\t")
            f.write(f"{user}::{item}::{int(float(rating))}::{int(float(ts))}\n")

    with open(os.path.join(out_dir, "movies.dat"), "w", newline="\n") as f:
        for line in items[1:]:
            item, title, year, genres = line.split("\t")
            title = title.replace("::", ":")
            if year:
                title = f"{title} ({year})"
            f.write(f"{item}::{title}::{'|'.join(genres.split())}\n")
    print(f"wrote {len(inter) - 1} ratings and {len(items) - 1} movies to {out_dir}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "ml-100k"))
    parser.add_argument("--wheel", help="use an already downloaded recbole wheel")
    args = parser.parse_args()
    if args.wheel:
        convert(args.wheel, args.out)
        return
    with tempfile.TemporaryDirectory() as tmp:
        convert(find_wheel(tmp), args.out)


if __name__ == "__main__":
    main()
