#!/usr/bin/env python3
"""Build a small balanced MNIST subset in IDX format (gzip-compressed).

Source: the digit JSON files shipped in the npm package `mnist` (1.1.0),
`src/digits/<d>.json`, which store real MNIST pixels as byte/255 rounded to
three decimals. round(v * 255) recovers the original bytes exactly.

    npm pack mnist && tar xzf mnist-1.1.0.tgz
    python3 scripts/make_mnist_subset.py package/src/digits crates/core/tests/data/mnist-subset
"""
import gzip
import json
import struct
import sys
from pathlib import Path

TRAIN_PER_DIGIT = 200
TEST_PER_DIGIT = 100
PIXELS = 28 * 28


def load_digit(path):
    flat = json.loads(path.read_text())["data"]
    assert len(flat) % PIXELS == 0
    out = []
    for k in range(len(flat) // PIXELS):
        img = bytes(int(round(v * 255)) for v in flat[k * PIXELS:(k + 1) * PIXELS])
        out.append(img)
    return out


def write_images(path, images):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(img)


def write_labels(path, labels):
    with gzip.GzipFile(path, "wb", mtime=0) as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def main():
    src, dst = Path(sys.argv[1]), Path(sys.argv[2])
    dst.mkdir(parents=True, exist_ok=True)
    digits = [load_digit(src / f"{d}.json") for d in range(10)]
    splits = {
        "train": (0, TRAIN_PER_DIGIT),
        "t10k": (TRAIN_PER_DIGIT, TRAIN_PER_DIGIT + TEST_PER_DIGIT),
    }
    for prefix, (lo, hi) in splits.items():
        images, labels = [], []
        # interleave digits so the file order is not label-sorted
        for k in range(lo, hi):
            for d in range(10):
                images.append(digits[d][k])
                labels.append(d)
        write_images(dst / f"{prefix}-images-idx3-ubyte.gz", images)
        write_labels(dst / f"{prefix}-labels-idx1-ubyte.gz", labels)
        print(prefix, len(labels))


if __name__ == "__main__":
    main()
