"""Acceptance criteria, one test each, with a PASS/FAIL line per criterion.

The lines are collected in ``RESULTS`` and echoed in the pytest terminal
summary (see ``conftest.py``); running this file directly prints them too.
"""

import math
import time

import numpy as np
import pytest

from contrailmatch import geo
from contrailmatch.advection import ParcelTrajectories, Parcels
from contrailmatch.attribution import AttributionState, MatchConfig, assign_hungarian, attribute_frame, softmax_probabilities, update_memory
from contrailmatch.evaluation import Outcome, evaluate
from contrailmatch.geometry import PixelGraph, PixelMask, Polyline, directed_hausdorff, longest_path, skeleton_to_graph, thin
from contrailmatch.met import MetGrid
from contrailmatch.pipeline import load_config, run_pipeline, with_overrides
from contrailmatch.synthetic import ScenarioSpec, ambiguity_sequence, generate_scenario, write_scenario
from oracles import best_assignment_total, fine_hausdorff, fine_step_positions, longest_simple_path_weight, tree_diameter_bfs

RESULTS: list[str] = []


def report(n: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:>2}: {detail}"
    RESULTS.append(line)
    print(line)


def _run_scenario(spec, tmp_path, overlays=False):
    t = time.perf_counter()
    scn = generate_scenario(spec)
    paths = write_scenario(scn, tmp_path)
    cfg = with_overrides(load_config(paths["config"]), out=tmp_path / "run", overlays=overlays)
    res = run_pipeline(cfg)
    return scn, res, time.perf_counter() - t


def test_criterion_01_clean_regime(tmp_path):
    scn, res, secs = _run_scenario(ScenarioSpec(seed=42, n_flights=10, old_fraction=0.2), tmp_path)
    rates = {p: r.rates for p, r in res.reports.items()}
    ok = (
        scn.report["n_new"] == 10
        and scn.report["n_old"] >= 1
        and all(r["new_correct_rate"] == 1 and r["old_omission_rate"] == 1 for r in rates.values())
        and secs < 30.0
    )
    first = rates["first"]
    report(1, ok, f"clean 10 flights + {scn.report['n_old']} old: correct {float(first['new_correct_rate']):.0%}, "
                  f"omission {float(first['old_omission_rate']):.0%} (need 100%/100%), {secs:.1f} s (< 30 s)")
    assert ok


def test_criterion_02_noisy_regime(tmp_path):
    spec = ScenarioSpec(seed=42, n_flights=20, sigma_px=5.0, wind_mismatch=0.5, old_fraction=0.2)
    scn, res, secs = _run_scenario(spec, tmp_path)
    parts = []
    ok = secs < 120.0
    for p, r in res.reports.items():
        c, w = float(r.rates["new_correct_rate"]), float(r.rates["new_wrong_rate"])
        ok &= c >= 0.90 and w <= 0.05
        parts.append(f"{p}: correct {c:.1%} wrong {w:.1%}")
    report(2, ok, f"sigma 5 px, 20 flights, 0.5 m/s wind mismatch: {'; '.join(parts)} (need >= 90% / <= 5%), {secs:.1f} s (< 120 s)")
    assert ok


def test_criterion_03_memory_benefit():
    frames, contrails = ambiguity_sequence(n_contrails=20, n_frames=6)
    state = AttributionState()
    for f in frames:
        attribute_frame(state, f, MatchConfig())
    asg = {(h.frame_time, a.contrail_id): a.flight_id for h in state.history for a in h.assignments}
    reps = evaluate(contrails.values(), asg)
    wf = reps["first"].counts[Outcome.WRONG_ATTRIBUTION]
    wl = reps["last"].counts[Outcome.WRONG_ATTRIBUTION]
    ok = wl <= wf
    report(3, ok, f"ambiguity sequence wrong attributions first {wf}/20 -> last {wl}/20 (need last <= first)")
    assert ok


def test_criterion_04_hausdorff_oracle():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(200):
        pts = np.cumsum(rng.normal(0, 10, (int(rng.integers(2, 7)), 2)), axis=0) + 60
        polys = [[rng.uniform(20, 100, (int(rng.integers(3, 8)), 2))] for _ in range(int(rng.integers(1, 4)))]
        got = directed_hausdorff(Polyline(pts), polys)
        worst = max(worst, abs(got - fine_hausdorff([pts], polys)))
    ok = worst <= 1.0
    report(4, ok, f"200 Hausdorff pairs, max |fast - fine oracle| = {worst:.4f} px (need <= 1 px)")
    assert ok


def test_criterion_05_assignment_oracle():
    rng = np.random.default_rng(5)
    worst = 0.0
    for _ in range(100):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        P = np.where(rng.random((m, n)) < 0.3, 0.0, rng.random((m, n)))
        picks = assign_hungarian(P)
        total = sum(P[i, j] for i, j in enumerate(picks) if j is not None)
        worst = max(worst, abs(total - best_assignment_total(P)))
    ok = worst <= 1e-9
    report(5, ok, f"100 matrices up to 6x6, max total-probability gap {worst:.2e} (need <= 1e-9)")
    assert ok


def test_criterion_06_ewma_closed_form():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(200):
        alpha, d0, d = rng.uniform(0, 1), rng.uniform(0, 60), rng.uniform(0, 30)
        s = AttributionState(memory={("c", "f"): d0})
        for k in range(1, 51):
            update_memory(s, {("c", "f"): d}, alpha, 30.0)
            worst = max(worst, abs(abs(s.memory[("c", "f")] - d) - alpha**k * abs(d0 - d)))
    ok = worst <= 1e-12
    report(6, ok, f"EWMA vs closed form for k <= 50, max error {worst:.2e} (need <= 1e-12)")
    assert ok


def test_criterion_07_softmax_invariants():
    rng = np.random.default_rng(7)
    sum_err, excluded, order_ok = 0.0, 0.0, True
    for _ in range(300):
        m, n = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        D = np.round(rng.uniform(0, 30, (m, n)), 2)
        D[rng.random((m, n)) < 0.3] = math.inf
        fin = np.isfinite(D)
        for beta in (0.1, 1.0, 10.0):
            P = softmax_probabilities(D, beta)
            for i in range(m):
                if not fin[i].any():
                    continue
                sum_err = max(sum_err, abs(P[i].sum() - 1.0))
                order_ok &= D[i, int(np.argmax(P[i]))] == D[i][fin[i]].min()
            if (~fin).any():
                excluded = max(excluded, float(P[~fin].max()))
    ok = sum_err <= 1e-9 and order_ok and excluded < 1e-12
    report(7, ok, f"row sums err {sum_err:.1e} (<= 1e-9), argmax == argmin for beta in (0.1, 1, 10): {order_ok}, "
                  f"excluded mass {excluded:.1e} (< 1e-12)")
    assert ok


def _random_tree(rng, n):
    occupied = {(0, 0)}
    nodes, edges, weights = [(0, 0)], [], []
    for _ in range(400):
        if len(nodes) >= n:
            break
        parent = nodes[int(rng.integers(len(nodes)))]
        dx, dy = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1) if (a, b) != (0, 0)][int(rng.integers(8))]
        cand = (parent[0] + dx, parent[1] + dy)
        touching = [p for p in occupied if max(abs(p[0] - cand[0]), abs(p[1] - cand[1])) == 1]
        if cand in occupied or touching != [parent]:
            continue
        occupied.add(cand)
        edges.append((nodes.index(parent), len(nodes)))
        weights.append(math.hypot(dx, dy))
        nodes.append(cand)
    return nodes, edges, weights


def _tree_components(g):
    """Each tree component of ``g`` (at least one edge) as its own graph."""
    for comp in g.components():
        sub = {v: k for k, v in enumerate(comp)}
        pairs = [((sub[i], sub[j]), w) for (i, j), w in zip(g.edges.tolist(), g.weights.tolist()) if i in sub]
        if pairs and len(pairs) == len(comp) - 1:
            yield PixelGraph(g.nodes[comp], [e for e, _ in pairs], [w for _, w in pairs])


def test_criterion_08_thinning_and_skeleton():
    rng = np.random.default_rng(8)
    n_masks = n_tree_masks = 0
    ok = True
    for _ in range(300):
        bits = rng.random((9, 9)) < 0.5
        skel = thin(PixelMask(bits)).bits
        ok &= bool(np.all(skel <= bits)) and np.array_equal(thin(PixelMask(skel)).bits, skel)
        n_masks += 1
        trees = list(_tree_components(skeleton_to_graph(PixelMask(skel))))
        for t in trees:
            d = tree_diameter_bfs(t.n_nodes, t.edges.tolist(), t.weights.tolist())
            ok &= abs(longest_path(t).length - d) <= 1e-9
        n_tree_masks += bool(trees)
    n_trees = 0
    for _ in range(100):
        nodes, edges, weights = _random_tree(rng, int(rng.integers(2, 13)))
        got = longest_path(PixelGraph(nodes, edges, weights)).length
        ok &= abs(got - longest_simple_path_weight(nodes, edges, weights)) <= 1e-9
        n_trees += 1
    ok &= n_tree_masks >= 50
    report(8, ok, f"{n_masks} 9x9 masks idempotent and subset, {n_tree_masks} with tree skeleton components matching the diameter "
                  f"(need >= 50), "
                  f"{n_trees} random trees <= 12 nodes match enumeration")
    assert ok


def _grid(u, v, shear):
    t = np.array([0.0, 7200.0])
    p = np.array([200.0, 300.0])
    lat = 48.0 + np.array([-3.0, 3.0])
    lon = 2.0 + np.array([-3.0, 3.0])
    shape = (2, 2, 2, 2)
    uu = np.full(shape, u) + shear * (lat - 48.0)[None, None, :, None]
    return MetGrid(t, p, lat, lon, uu, np.full(shape, v))


def test_criterion_09_advection():
    pc = Parcels("F", np.zeros(1), np.array([48.0]), np.array([2.0]), np.array([250.0]))
    st_, _, _ = ParcelTrajectories(pc, _grid(10.0, 0.0, 0.0), 30.0, t_max=60.0).positions_at(60.0)
    east, _ = geo.local_offset_m(48.0, 2.0, st_[0, 0], st_[0, 1])
    rel = abs(east - 600.0) / 600.0

    def wind(t, p, lat, lon):
        return 15.0 + 40.0 * (lat - 48.0), 8.0, 0.0

    ref = fine_step_positions(wind, 48.0, 2.0, 250.0, 0.0, 1200.0, dt=0.05)
    errs = []
    for step in (60.0, 30.0, 15.0, 7.5):
        s, _, _ = ParcelTrajectories(pc, _grid(15.0, 8.0, 40.0), step, t_max=1200.0).positions_at(1200.0)
        errs.append(float(np.hypot(*geo.local_offset_m(ref[0], ref[1], s[0, 0], s[0, 1]))))
    ratios = [a / b for a, b in zip(errs[:-1], errs[1:])]
    ok = rel <= 1e-6 and all(1.7 < r < 2.3 for r in ratios)
    report(9, ok, f"uniform wind rel error {rel:.1e} (<= 1e-6); error ratios under step halving "
                  f"{', '.join(f'{r:.2f}' for r in ratios)} (first order, each in 1.7-2.3)")
    assert ok


def test_criterion_10_determinism(tmp_path):
    scn = generate_scenario(ScenarioSpec(seed=42, n_flights=5, old_fraction=0.2, sigma_px=3.0))
    paths = write_scenario(scn, tmp_path / "scn")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        run_pipeline(with_overrides(load_config(paths["config"]), out=out, overlays=True))
        outs.append(out)
    files = sorted(p.relative_to(outs[0]) for p in outs[0].rglob("*") if p.is_file())
    same = all((outs[0] / f).read_bytes() == (outs[1] / f).read_bytes() for f in files)
    n_svg = sum(f.suffix == ".svg" for f in files)
    ok = same and n_svg > 0 and {"records.csv", "report.json", "flows.csv"} <= {f.name for f in files}
    report(10, ok, f"two runs, {len(files)} files ({n_svg} overlays) byte-identical: {same}")
    assert ok


def test_criterion_11_external_dataset():
    RESULTS.append("SKIP criterion 11: external annotated camera dataset not available (non-blocking)")
    pytest.skip("needs a user-supplied converted dataset and camera calibration")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
