#!/usr/bin/env python3
# Copyright 2026 The DIKM Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Convert the digits shipped in the `mnist` npm package into IDX files.

The package stores 28x28 digits as per-class JSON arrays of intensities in
[0, 1]. Each class is split 80/20 into train/test and the samples of each
split are interleaved round-robin over the classes, so the first ten train
images cover the ten digits.

    npm pack mnist && tar xzf mnist-*.tgz
    python3 tools/mnist_npm_to_idx.py package/src/digits data/mnist
"""
import argparse
import json
import pathlib
import struct

SIZE = 28


def write_idx(path, images, labels):
    with open(path / "images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), SIZE, SIZE))
        for img in images:
            f.write(bytes(img))
    with open(path / "labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def interleave(per_class):
    out = []
    cursors = [0] * len(per_class)
    while any(c < len(s) for c, s in zip(cursors, per_class)):
        for label, samples in enumerate(per_class):
            if cursors[label] < len(samples):
                out.append((samples[cursors[label]], label))
                cursors[label] += 1
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("digits_dir", type=pathlib.Path)
    ap.add_argument("out_dir", type=pathlib.Path)
    ap.add_argument("--train-fraction", type=float, default=0.8)
    args = ap.parse_args()

    train, test = [], []
    for label in range(10):
        raw = json.loads((args.digits_dir / f"{label}.json").read_text())["data"]
        n = len(raw) // (SIZE * SIZE)
        samples = []
        for s in range(n):
            chunk = raw[s * SIZE * SIZE:(s + 1) * SIZE * SIZE]
            samples.append([min(255, max(0, round(v * 255))) for v in chunk])
        cut = int(round(n * args.train_fraction))
        train.append(samples[:cut])
        test.append(samples[cut:])

    for name, split in (("train", train), ("test", test)):
        d = args.out_dir / name
        d.mkdir(parents=True, exist_ok=True)
        pairs = interleave(split)
        write_idx(d, [p[0] for p in pairs], [p[1] for p in pairs])
        print(name, len(pairs))


if __name__ == "__main__":
    main()
