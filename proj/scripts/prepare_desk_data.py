#!/usr/bin/env python3
"""Build desk-scale mnist / mnist-rot files from the 5,000 MNIST digits bundled
with the mlxtend wheel.

Outputs (in --out):
  mnist/train-images-idx3-ubyte, mnist/train-labels-idx1-ubyte
      first half of a seeded shuffle of the 5,000 digits, upright, IDX format
  mnist-rot/mnist_all_rotation_normalized_float_train_valid.amat
      the same digits, each rotated by an angle drawn uniformly from [0, 360)
  mnist-rot/mnist_all_rotation_normalized_float_test.amat
      the other half, rotated the same way

The rotated split is produced the way the public mnist-rot set was: bilinear
rotation about the image centre, pixels in [0, 1], label as the last column.
"""

import argparse
import gzip
import io
import os
import struct
import subprocess
import sys
import tempfile
import zipfile

import numpy as np
from scipy import ndimage

MEMBER = "mlxtend/data/data/mnist_5k.csv.gz"


def read_bundled_csv():
    try:
        import mlxtend.data  # noqa: F401

        path = os.path.join(os.path.dirname(mlxtend.data.__file__), "data", "mnist_5k.csv.gz")
        with open(path, "rb") as f:
            return gzip.decompress(f.read())
    except ImportError:
        pass
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, "mlxtend==0.24.0"],
            check=True,
        )
        wheel = next(f for f in os.listdir(tmp) if f.endswith(".whl"))
        with zipfile.ZipFile(os.path.join(tmp, wheel)) as z:
            return gzip.decompress(z.read(MEMBER))


def write_idx(out_dir, images, labels):
    os.makedirs(out_dir, exist_ok=True)
    n = images.shape[0]
    with open(os.path.join(out_dir, "train-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(os.path.join(out_dir, "train-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.astype(np.uint8).tobytes())


def write_amat(path, images, labels, rng):
    rows = []
    for img, lab in zip(images, labels):
        angle = rng.uniform(0.0, 360.0)
        rot = ndimage.rotate(img.reshape(28, 28) / 255.0, angle, reshape=False, order=1, mode="constant")
        rot = np.clip(rot, 0.0, 1.0).ravel()
        vals = " ".join("0" if v == 0.0 else f"{v:.6g}" for v in rot)
        rows.append(f"{vals} {lab:d}\n")
    with open(path, "w") as f:
        f.writelines(rows)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=20170101)
    args = ap.parse_args()

    raw = np.loadtxt(io.StringIO(read_bundled_csv().decode()), delimiter=",")
    rng = np.random.default_rng(args.seed)
    # The bundled file is sorted by label; mix it before splitting.
    order = rng.permutation(raw.shape[0])
    images = raw[order, :-1].astype(np.uint8)
    labels = raw[order, -1].astype(int)
    half = images.shape[0] // 2

    write_idx(os.path.join(args.out, "mnist"), images[:half], labels[:half])
    rot_dir = os.path.join(args.out, "mnist-rot")
    os.makedirs(rot_dir, exist_ok=True)
    write_amat(os.path.join(rot_dir, "mnist_all_rotation_normalized_float_train_valid.amat"),
               images[:half], labels[:half], rng)
    write_amat(os.path.join(rot_dir, "mnist_all_rotation_normalized_float_test.amat"),
               images[half:], labels[half:], rng)
    with open(os.path.join(args.out, "READY"), "w") as f:
        f.write("ok\n")


if __name__ == "__main__":
    main()
