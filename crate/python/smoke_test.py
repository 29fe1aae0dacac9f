"""Quick check of the pyqut extension: build a few matrices, diagonalize,
compare against the bisection oracle."""

import json
import math

import pyqut


def check(m, tol=1e-10):
    s = pyqut.diagonalize(m, vectors=True)
    ref, _ = m.oracle()
    assert len(s) == m.ell
    dev = max(abs(a - b) for a, b in zip(s.eigenvalues, ref))
    assert dev < tol, dev
    assert s.orthogonality_residual() < 1e-8
    c = s.counts
    assert c["in_band"] + c["above_band"] + c["below_band"] == m.ell
    return s, dev


m = pyqut.QutMatrix.uniform(50, 0.3, -1.2)
s, dev = check(m)
assert s.counts["in_band"] == 50
print(f"uniform ell=50: max dev {dev:.3e}")

m = pyqut.preset("two-edge", 200, x=2.0, y=1.5)
s, dev = check(m)
outside = [md for md in s.modes if md.branch != "in-band"]
assert all(md.p is not None and md.k is None for md in outside)
print(f"two-edge ell=200: {s.counts}, max dev {dev:.3e}")

m = pyqut.QutMatrix.from_edges(40, 0.0, 1.0, left_a=[0.5, -0.2], left_b=[0.7, 1.3], right_a=[0.4], right_b=[0.6])
s, dev = check(m)
print(f"from_edges ell=40: block {m.block}, max dev {dev:.3e}")

doc = json.loads(s.to_json())
assert doc["metadata"]["ell"] == 40
assert [float(x) for x in doc["eigenvalues"]] == s.eigenvalues

m = pyqut.QutMatrix.from_json('{"ell": 30, "bulk": {"a": 0.0, "b": 1.0}}')
assert m.sturm_count(0.0) == 15

try:
    pyqut.QutMatrix.uniform(10, 0.0, 0.0)
except ValueError as e:
    print(f"zero coupling rejected: {e}")
else:
    raise AssertionError("expected ValueError")

w = pyqut.norm_integral(1.5, 1.0)
assert math.isfinite(w) and 0.0 < w <= 1.0 + 1e-12
print(f"norm integral (1.5, 1.0) = {w:.17g}")
print("ok")
