"""Smoke test for the `bdci` extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python python/smoke_test.py`.
"""

import math
import tempfile

import bdci

ANCHOR = [(100.0, 30.0), (200.0, 33.0), (400.0, 36.0), (800.0, 38.5), (1600.0, 40.5)]


def close(a, b, tol=1e-6):
    return abs(a - b) <= tol


def main():
    anchor = bdci.RdCurve(ANCHOR)
    assert len(anchor) == 5
    assert anchor.metric == "quality"

    faster = anchor.scale_rates(0.8)
    for method in ("cubic", "csi", "pchip", "akima"):
        r = bdci.bd(anchor, faster, "br", method)
        assert close(r["delta_rate_percent"], -20.0), r
    q = bdci.bd(anchor, anchor.shift_quality(0.5), mode="quality")
    assert close(q["delta"], 0.5), q

    parsed = bdci.RdCurve.parse(anchor.to_text())
    assert parsed.rates == anchor.rates and parsed.qualities == anchor.qualities

    try:
        bdci.RdCurve([(100.0, 30.0), (200.0, 29.0), (400.0, 36.0), (800.0, 38.0)])
    except bdci.BdciError as e:
        assert str(e).startswith("NonMonotoneQuality"), e
    else:
        raise AssertionError("non-monotone curve accepted")

    with tempfile.TemporaryDirectory() as tmp:
        records = bdci.generate_corpus(tmp + "/corpus", curves=200, seed=1, samplings=10)
        assert records > 0
        bundle = bdci.train(tmp + "/corpus", seed=2, epochs=1)
        path = tmp + "/model.bundle"
        bundle.save(path)
        again = bdci.ModelBundle.load(path)
        assert again.digest == bundle.digest
        assert bdci.ModelBundle.from_bytes(bundle.to_bytes()).digest == bundle.digest

        r = again.bdci(anchor, faster)
        lo, hi = r["interval_delta"]
        assert lo <= r["mean_delta"] <= hi
        assert math.isfinite(r["sigma_delta"])
        corrupt = bytearray(bundle.to_bytes())
        corrupt[len(corrupt) // 2] ^= 0x40
        try:
            bdci.ModelBundle.from_bytes(bytes(corrupt))
        except bdci.BdciError:
            pass
        else:
            raise AssertionError("corrupted bundle accepted")

    print(f"bdci {bdci.__version__} smoke test OK")


if __name__ == "__main__":
    main()
