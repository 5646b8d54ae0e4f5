# Copyright 2026 The palm-cs Authors
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

"""Quick end-to-end check of the palm_cs extension module.

Build and install the wheel first:

    (cd crates/python && maturin build --release -o ../../dist)
    pip install dist/palm_cs-*.whl
    python python/smoke_test.py
"""

import math
import os
import tempfile

import palm_cs


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAILED: {what}")
    print(f"ok  {what}")


def main():
    check(palm_cs.shrink([3.0, -0.5, -2.0], 1.0) == [2.0, 0.0, -1.0], "shrink")

    op = palm_cs.SensingOperator.partial_dct(64, 128, 7)
    check((op.rows, op.cols, op.rows_orthonormal) == (64, 128, True), "operator shape")
    check(palm_cs.SensingOperator.from_bytes(op.to_bytes()) == op, "container round trip")

    x_true = [0.0] * 128
    for j, v in [(3, 1.0), (40, -1.0), (77, 1.0), (90, -1.0), (121, 1.0)]:
        x_true[j] = v
    b = op.matvec(x_true)
    res = palm_cs.solve(op, b, mu=1e-6 * max(map(abs, b)))
    err = math.sqrt(sum((p - q) ** 2 for p, q in zip(res.x, x_true))) / math.sqrt(5)
    check(err < 1e-3, f"sparse recovery (rel. error {err:.1e}, {res.iterations} iterations)")
    check(max(res.kkt.values()) < 1e-4, "KKT report")

    check(palm_cs.mutual_coherence("identity:hadamard4") == 1.0, "coherence of identity/Hadamard")
    check(abs(palm_cs.psnr_from_rmse(32.6403) - 17.8557) < 1e-3, "PSNR from RMSE")

    img = palm_cs.Image.test_pattern(32, 64)
    noisy = palm_cs.add_noise(img, "salt_pepper", 0.1, seed=3)
    changed = sum(p != q for p, q in zip(img.pixels, noisy.pixels))
    check(changed <= round(0.1 * 32 * 64), "salt & pepper corrupts at most the requested count")

    rec, psnr, rmse, secs = palm_cs.reconstruct(img, ratio=0.5, seed=1)
    check((rec.width, rec.height) == (32, 64) and psnr > 20.0, f"reconstruction ({psnr:.2f} dB)")

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "rec.pgm")
        rec.save(path)
        back = palm_cs.Image.load(path)
        check(back.pixels == rec.pixels, "PGM round trip")

    try:
        palm_cs.shrink([1.0], -1.0)
    except ValueError:
        check(True, "invalid arguments raise ValueError")
    else:
        check(False, "invalid arguments raise ValueError")


if __name__ == "__main__":
    main()
