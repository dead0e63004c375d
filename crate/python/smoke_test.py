#!/usr/bin/env python3
"""Smoke test for the ciex_py extension module.

Build the extension first:

    cargo build -p ciex-py --release

then run this script from the repository root:

    python3 python/smoke_test.py
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        REPO / "target" / "release" / "libciex_py.so",
        REPO / "target" / "debug" / "libciex_py.so",
        REPO / "target" / "release" / "libciex_py.dylib",
        REPO / "target" / "debug" / "libciex_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("extension not built; run: cargo build -p ciex-py --release")
    stage = Path(tempfile.mkdtemp(prefix="ciex_py_"))
    shutil.copy(built, stage / "ciex_py.so")
    sys.path.insert(0, str(stage))
    import ciex_py

    return ciex_py


def check(name, condition, detail=""):
    status = "PASS" if condition else "FAIL"
    print(f"{status} {name}{': ' + detail if detail else ''}")
    return condition


def main():
    m = load_module()
    ok = True

    score = m.auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
    ok &= check("auc worked example", abs(score - 0.75) < 1e-12, f"auc={score}")

    # Kickout worked example: 20 accepted rows, benchmark accepts the 10
    # lowest at alpha 0.5, of which ids 1, 3, 5, 7 are bad (S_B = 4). The RI
    # model kicks out two bads (3, 7) and one good (4).
    bm = [i / 20 for i in range(20)]
    labels = [1 if i in (1, 3, 5, 7, 12, 15) else 0 for i in range(20)]
    ri = list(bm)
    ri[3], ri[7], ri[4] = 0.99, 0.98, 0.97
    k = m.kickout(bm, ri, [], labels, 0.5)
    expect = (2 / 0.4 - 1 / 0.6) / (4 / 0.4)
    ok &= check("kickout crafted instance", abs(k - expect) < 1e-9, f"kickout={k}")
    ok &= check("kickout at alpha 1 is 0", m.kickout(bm, ri, [], labels, 1.0) == 0.0)
    ok &= check("auk of identical model is 0", m.auk(bm, bm, [], labels) == 0.0)

    data = m.synth_credit_py(600, 900, 0.5, seed=42)
    ok &= check(
        "synth shapes",
        len(data["accepted_x"]) == 600
        and len(data["reject_x"]) == 900
        and len(data["hidden_y"]) == 900,
    )

    model = m.LogisticModel.fit(data["accepted_x"], data["accepted_y"])
    probs = model.predict_proba(data["accepted_x"])
    ok &= check("probabilities in (0,1)", all(0 < p < 1 for p in probs))
    train_auc = m.auc(probs, data["accepted_y"])
    ok &= check("classifier learns synth data", train_auc > 0.75, f"auc={train_auc}")

    round_trip = m.LogisticModel.from_json(model.to_json())
    ok &= check(
        "model json round trip",
        round_trip.coefficients() == model.coefficients(),
    )

    cluster = data["accepted_x"][:300]
    outlier = [[50.0] * len(cluster[0])]
    forest = m.IsolationForest.fit(cluster, n_trees=50, seed=3)
    s_out = forest.scores(outlier)[0]
    s_in = forest.scores(cluster)
    ok &= check(
        "isolation forest isolates the far point",
        s_out > max(s_in),
        f"outlier={s_out:.3f} max_in={max(s_in):.3f}",
    )
    ok &= check(
        "contamination bounds training outliers",
        sum(not i for i in forest.is_inlier(cluster)) <= math.ceil(0.12 * 300),
    )

    winner, closeness = m.topsis_select([[0.80, 0.01], [0.79, 0.05]], [1.0, 10.0])
    ok &= check("topsis prefers high kickout", winner == 1, f"closeness={closeness}")

    records = m.run_ciex_py(
        data["accepted_x"][:400],
        data["accepted_y"][:400],
        data["reject_x"][:500],
        data["accepted_x"][400:],
        data["accepted_y"][400:],
        data["reject_x"][500:700],
        eta=80,
        bad_fraction=0.2,
        max_iterations=3,
        seed=1,
    )
    total = records[0]["labeled_size"] + records[0]["reject_size"]
    conserved = all(r["labeled_size"] + r["reject_size"] == total for r in records)
    ok &= check(
        "ciex runs with conservation",
        len(records) >= 2 and conserved,
        f"iterations={len(records) - 1}",
    )

    if not ok:
        sys.exit(1)
    print(f"all smoke checks passed (ciex_py {m.__version__})")


if __name__ == "__main__":
    main()
