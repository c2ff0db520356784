#!/usr/bin/env python3
# Copyright 2026 The LRKV Lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes tiny_mha_f64.lrkv with the standard library only.

A second, independent writer for the archive layout: magic, u64 LE header
length, JSON header, little-endian float64 blob.
"""
import json
import struct
import sys

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3


def fnv1a64(data):
    h = FNV_OFFSET
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & 0xFFFFFFFFFFFFFFFF
    return h


def main(path):
    # H = 1, d = d_h = 2. Entry k of tensor t is (t * 4 + k) / 8 - 0.75.
    names = ["wq.0", "wk.0", "wv.0"]
    blob = b""
    tensors = []
    for t, name in enumerate(names):
        values = [(t * 4 + k) / 8.0 - 0.75 for k in range(4)]
        data = struct.pack("<4d", *values)
        tensors.append({"name": name, "dtype": "f64", "shape": [2, 2],
                        "offset": len(blob), "length": len(data)})
        blob += data
    header = {
        "format_version": 1,
        "metadata": {
            "config": {"mechanism": "MHA", "d": 2, "H": 1, "d_h": 2, "n_layers": 1},
            "rng_algorithm": "none",
        },
        "tensors": tensors,
        "blob_bytes": len(blob),
        "blob_fnv1a64": "%016x" % fnv1a64(blob),
    }
    text = json.dumps(header, separators=(",", ":")).encode()
    with open(path, "wb") as f:
        f.write(b"LRKVARC\0")
        f.write(struct.pack("<Q", len(text)))
        f.write(text)
        f.write(blob)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tiny_mha_f64.lrkv")
