"""Smoke test for the `twisted` extension module. Build it first with
`maturin build --release -m crates/python/Cargo.toml` and install the wheel."""

import json

import twisted


def main():
    c = twisted.Complex(0, [1, 1], {0: [[2]]})
    assert c.is_valid()
    h = c.homology_all()
    assert list(h) == [1] and h[1].free == 0 and h[1].torsion == [2], h
    assert str(h[1]) == "Z/2"

    assert twisted.smith_diagonal([[2, 4], [6, 8]]) == [2, 4]
    big = 2**70
    assert twisted.smith_diagonal([[big]]) == [big]

    diag = twisted.Complex(0, [2, 2], {0: [[2, 0], [0, 3]]})
    assert str(diag.homology(1)) == "Z/6"

    z = twisted.TwistedComplex.single("Z", twisted.Complex(0, [1]))
    r = twisted.TwistedComplex.single("R", twisted.Complex(-1, [1, 1], {-1: [[2]]}))
    assert str(z.tr_hom(r)) == "Z/2"
    assert z.tr_hom(z).free == 1

    two = json.dumps({"degree": 0, "blocks": {"0,0": {"degree": 0, "blocks": {"0": [[2]]}}}})
    assert z.null_homotopy(r, two) is not None
    cone = z.cone(z, json.dumps({"degree": 0, "blocks": {"0,0": {"degree": 0, "blocks": {"0": [[1]]}}}}))
    assert cone.is_valid() and cone.tr_hom(cone).is_zero()

    t = z.tensor(r)
    assert t.is_valid() and t.dual().is_valid()
    assert twisted.TwistedComplex.from_json(t.to_json()) == t
    assert twisted.TwistedComplex.unit().tensor(z) == z

    code, out = twisted.run("homology", [c.to_json()])
    assert code == 0 and json.loads(out) == {"H": {"1": {"free": 0, "torsion": [2]}}}
    code, out = twisted.run("d2-audit", trials=20, seed=7, format="text")
    assert code == 0 and "violations: 0" in out, out
    bad = twisted.Complex(0, [1, 1, 1], {0: [[1]], 1: [[1]]})
    assert twisted.run("validate", [bad.to_json()])[0] == 1
    try:
        twisted.run("homology", ["{"])
    except ValueError:
        pass
    else:
        raise AssertionError("malformed input must raise")
    assert len(twisted.COMMANDS) == 19
    print("python smoke test passed")


if __name__ == "__main__":
    main()
