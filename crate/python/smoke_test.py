#!/usr/bin/env python3
"""Smoke test for the cuspfuse_py extension module.

Builds nothing itself: run `cargo build --release -p cuspfuse-py` (or a
debug build) first. The script locates the compiled cdylib, exposes it
under the importable name, and exercises the main surface end to end.
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load_module():
    candidates = [
        ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libcuspfuse_py.so", "cuspfuse_py.so", "libcuspfuse_py.dylib")
    ]
    built = [p for p in candidates if p.exists()]
    if not built:
        sys.exit("no compiled extension found; run: cargo build --release -p cuspfuse-py")
    newest = max(built, key=lambda p: p.stat().st_mtime)
    staging = Path(tempfile.mkdtemp(prefix="cuspfuse_py_"))
    shutil.copy2(newest, staging / "cuspfuse_py.so")
    sys.path.insert(0, str(staging))
    import cuspfuse_py

    return cuspfuse_py


def approx(got, expected, tol, label):
    assert abs(got - expected) <= tol, f"{label}: got {got}, expected {expected} +/- {tol}"


def main():
    m = load_module()

    # Potential geometry.
    approx(m.potential(1.0, 0.0, 1.0), -0.25, 1e-12, "potential")
    approx(m.gradient(2.0, 1.0, 1.0), 5.0, 1e-12, "gradient")
    approx(m.fold_boundary_b(0.5), 3.0 / (2.0 * 2.0 ** (1.0 / 3.0)), 1e-9, "fold boundary")
    assert m.stability(0.0, 3.0) == "bistable"
    assert m.stability(2.1, 3.0) == "monostable"

    minima, maximum, degenerate = m.critical_points(0.0, 1.0)
    approx(minima[0], -1.0, 1e-9, "left minimum")
    approx(minima[1], 1.0, 1e-9, "right minimum")
    approx(maximum, 0.0, 1e-9, "maximum")
    assert not degenerate

    approx(m.local_minimum_from(0.5, 0.0, 1.0), 1.0, 1e-6, "minimizer")
    approx(m.local_minimum_from(-0.5, 0.0, 1.0), -1.0, 1e-6, "minimizer mirror")

    # Reproducible sampling with valid per-person invariants.
    population = m.sample_population(n=800, seed=11)
    assert len(population) == 800
    again = m.sample_population(n=800, seed=11)
    for p, q in zip(population, again):
        assert (p.a, p.b, p.x, p.y) == (q.a, q.b, q.x, q.y), "sampling not reproducible"
    for p in population[:50]:
        residual = p.x**3 - p.b * p.x - p.a
        assert abs(residual) <= 1e-8, f"stationarity violated: {residual}"
        approx(p.p, 1.0 / (1.0 + math.exp(-10.0 * p.x)), 1e-12, "vote probability")
        assert p.y in (0, 1)

    # Fusion phenomenon: B alone useless, joint informative.
    a = [p.a for p in population]
    b = [p.b for p in population]
    y = [p.y for p in population]
    model_b = m.fit_model(y, b=b, inputs="b")
    model_joint = m.fit_model(y, a=a, b=b, inputs="ab")
    report_b = m.evaluate_model(model_b, y, b=b)
    report_joint = m.evaluate_model(model_joint, y, a=a, b=b)
    assert 0.38 <= report_b["auc"] <= 0.62, f"AUC(B) = {report_b['auc']}"
    assert report_joint["auc"] >= report_b["auc"] + 0.2, (
        f"joint AUC {report_joint['auc']} vs B-only {report_b['auc']}"
    )
    stat, dof, p_value = m.chi_square_independence(b, y)
    assert dof == 9
    assert p_value > 0.01, f"chi-square p = {p_value}"

    # Switching mechanism on a ranked target.
    ranking = m.rank_targets(population)
    assert sorted(r["id"] for r in ranking) == list(range(800))
    top = ranking[0]
    assert top["branch"] == "metastable", top
    target = next(p for p in population if p.id == top["id"])
    outcome = m.apply_intervention(target, m.fold_boundary_b(target.a) - 0.01, sigma=10.0)
    assert outcome["flipped"], outcome
    assert (outcome["new_x"] > 0) == (target.a > 0)

    # Pipeline artifacts.
    out = Path(tempfile.mkdtemp(prefix="cuspfuse_out_"))
    files = m.run_pipeline(out, n=300, seed=9, resolution=12)
    names = {path for path, _ in files}
    for expected in (
        "population.csv",
        "db_a.csv",
        "db_b.csv",
        "joined.csv",
        "model_joint.json",
        "grid_joint.csv",
        "susceptibility.csv",
        "fusion_report.json",
        "fig_2b.svg",
    ):
        assert expected in names, f"missing artifact {expected}"
        assert (out / expected).exists()

    print("smoke test passed:", len(population), "people,", len(files), "artifacts")


if __name__ == "__main__":
    main()
