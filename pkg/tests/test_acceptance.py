"""End-to-end acceptance suite on a shared synthetic dataset.

Each test prints one ``criterion N: PASS|FAIL ...`` line (shown even without -s).
The dataset (500 programs, 2-4 ops, grid 4) is generated once per session.
Expect a long run: training the scorer twice dominates.
"""
import time
from fractions import Fraction

import numpy as np
import pytest

import gradcheck
from oracles import dyadic_points, interior_samples, sweep_contains, winding_numbers
from zonegraph.brep import serialize_brep
from zonegraph.dataset import generate_dataset, iter_records
from zonegraph.evaluation import (
    RANK_COLUMNS,
    RANK_NOTE,
    RECON_COLUMNS,
    coverage_report,
    eval_rank,
    eval_recon,
    to_csv,
)
from zonegraph.exact import Q
from zonegraph.guidance import HeuristicScorer, HyperParams, NetScorer, RandomScorer, ScorerModel, train_scorer
from zonegraph.guidance.labeling import build_training_set
from zonegraph.proposals import BoolType, Canvas, generate_proposals
from zonegraph.search import SearchConfig
from zonegraph.synth import SynthConfig
from zonegraph.zones import zone_graph_from_brep

pytestmark = pytest.mark.acceptance

DATA_SEED = 1
N_MODELS = 500
RECON = slice(0, 100)
TRAIN = slice(100, 400)
HELD_OUT = slice(400, 500)
TRAIN_SEED = 0
HP = HyperParams(steps=4000, lr_schedule="cosine")
RECON_CFG = SearchConfig(width_k=5, budget=30.0)


@pytest.fixture(scope="session")
def report(request):
    tr = request.config.pluginmanager.getplugin("terminalreporter")
    lines = []

    def emit(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        if tr is not None:
            tr.write_line("")
            tr.write_line(line)
        else:
            print(line)

    yield emit
    if tr is not None and lines:
        tr.write_line("")
        tr.write_sep("-", "acceptance summary")
        for line in sorted(lines):
            tr.write_line(line)


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("acceptance_data")
    generate_dataset(d, N_MODELS, DATA_SEED, SynthConfig(2, 4, 4))
    return d


def records(data_dir, part=slice(None)):
    return list(iter_records(data_dir, part.start or 0, part.stop))


# ---- criteria 1, 2 as re-runnable functions (criterion 8 repeats them)


def run_recon(data_dir, simplify=False):
    t0 = time.perf_counter()
    rep = eval_recon(records(data_dir, RECON), HeuristicScorer(), RECON_CFG, simplify=simplify)
    return rep, to_csv(RECON_COLUMNS, rep.rows), time.perf_counter() - t0


def run_ranking(data_dir):
    t0 = time.perf_counter()
    examples = build_training_set(records(data_dir, TRAIN), seed=TRAIN_SEED)
    model = train_scorer(examples, HP, seed=TRAIN_SEED)
    t_train = time.perf_counter() - t0
    held = records(data_dir, HELD_OUT)
    out = {}
    for scorer in (RandomScorer(TRAIN_SEED), HeuristicScorer(), NetScorer(model)):
        rows, mean = eval_rank(held, scorer)
        out[scorer.name] = (float(mean), to_csv(RANK_COLUMNS, rows, RANK_NOTE), len(rows))
    return out, t_train, len(examples)


@pytest.fixture(scope="session")
def recon_run(data_dir):
    return run_recon(data_dir)


@pytest.fixture(scope="session")
def ranking_run(data_dir):
    return run_ranking(data_dir)


def test_criterion_1_exact_reconstruction(recon_run, report):
    rep, _, wall = recon_run
    exact = sum(r["iou"] == "1" for r in rep.rows)
    ok = exact >= 95 and wall < 15 * 60
    report(1, ok, f"{exact}/100 exact (need >= 95), {wall:.0f}s total (limit 900s)")
    assert ok


def test_criterion_2_guidance_ordering(ranking_run, report):
    means, t_train, n_examples = ranking_run
    rnd, heur, net = (means[k][0] for k in ("random", "heur", "net"))
    checks = [0.40 <= rnd <= 0.60, heur <= 0.75 * rnd, net <= 0.85 * heur]
    ok = all(checks)
    report(2, ok, f"random {rnd:.4f} heur {heur:.4f} (<= {0.75 * rnd:.4f}) "
                  f"net {net:.4f} (<= {0.85 * heur:.4f}); {means['net'][2]} steps ranked, "
                  f"{n_examples} labelled examples, labelling+training {t_train:.0f}s")
    assert ok


# ---- criteria 3 and 7 (partition)


def _classification_mismatches(zg, doc, rng, n=200):
    lo, hi = [float(c) for c in zg.aabb[0]], [float(c) for c in zg.aabb[1]]
    bad, checked = 0, 0
    while checked < n:
        pts = dyadic_points(rng, lo, hi, 2 * n)
        w = winding_numbers(doc, pts)
        for p, wn in zip(pts, w):
            if abs(wn - round(wn)) > 0.05:
                continue  # on or too close to the surface for the float oracle
            q = tuple(Q(Fraction(x)) for x in p)
            hits = [h for h in zg.locate(q) if zg.zones[h].polytope.contains(q, strict=True)]
            if len(hits) != 1:
                continue  # on a zone boundary
            bad += (hits[0] in zg.interior_ids) != (round(wn) == 1)
            checked += 1
            if checked == n:
                break
    return bad


@pytest.fixture(scope="session")
def partition_run(data_dir):
    rng = np.random.default_rng(3)
    rows = []
    for rec in records(data_dir):
        doc = serialize_brep(rec.brep)
        row = {"model": rec.model_id}
        for simplify in (False, True):
            zg = rec.zg if not simplify else zone_graph_from_brep(rec.brep, simplify=True)
            vol_ok = sum((z.volume for z in zg.zones), Q(0)) == zg.box_volume
            row[simplify] = (len(zg.zones), vol_ok, _classification_mismatches(zg, doc, rng))
        rows.append(row)
    return rows


def test_criterion_3_partition_exactness(partition_run, report):
    fails = [r["model"] for r in partition_run for s in (False, True) if not r[s][1] or r[s][2]]
    ok = not fails and len(partition_run) == N_MODELS
    report(3, ok, f"{len(partition_run)} models x 2 modes x 200 points; failing models: {fails[:5] or 'none'}")
    assert ok


# ---- criterion 4


def test_criterion_4_proposal_soundness(data_dir, report):
    rng = np.random.default_rng(4)
    recs = records(data_dir)
    agree = 0
    mismatches = []
    while agree + len(mismatches) < 50:
        rec = recs[int(rng.integers(len(recs)))]
        zg = rec.zg
        canvas = Canvas(frozenset(z for z in zg.zone_ids if rng.random() < 0.4))
        props = generate_proposals(zg, canvas)
        if not props:
            continue
        e = props[int(rng.integers(len(props)))]
        inside = set()
        for z in zg.zones:
            if all(sweep_contains(zg, e, p) for p in interior_samples(z.polytope, rng, 500)):
                inside.add(z.id)
        want = inside - canvas.filled if e.bool_type is BoolType.UNION else inside & canvas.filled
        if set(e.zones) == want:
            agree += 1
        else:
            mismatches.append((rec.model_id, e.canonical_key))
    ok = agree == 50
    report(4, ok, f"{agree}/50 triples agree with the 500-point-per-zone sampling oracle; {mismatches[:3]}")
    assert ok


# ---- criterion 5


def test_criterion_5_gradient_check(report):
    model = ScorerModel.init(5)
    graphs, labels = gradcheck.toy_batch(np.random.default_rng(5), n_zones=3)
    worst, kinks = gradcheck.check(model, graphs, labels, per_tensor=12, h=1e-5)
    name = max(worst, key=worst.get)
    ok = worst[name] < 1e-4 and len(worst) == len(model.param_names)
    report(5, ok, f"max rel err {worst[name]:.2e} ({name}) over {len(worst)} tensors, {kinks} kink probes skipped")
    assert ok


# ---- criterion 6


def test_criterion_6_gt_coverage(data_dir, report):
    rep = coverage_report(iter_records(data_dir))
    ok = rep["sequences"] == N_MODELS and rep["fraction"] >= 0.9
    causes = ", ".join(f"{k}={v}" for k, v in rep["failures"].items())
    report(6, ok, f"{rep['covered']}/{rep['sequences']} fully covered ({rep['fraction']:.1%}); misses: {causes}")
    assert ok


# ---- criterion 7


def test_criterion_7_simplification_safety(partition_run, recon_run, data_dir, report):
    more = [r["model"] for r in partition_run if r[True][0] > r[False][0]]
    exact = [r["model"] for r in partition_run if not r[True][1] or r[True][2]]
    merged = sum(r[True][0] < r[False][0] for r in partition_run)
    base = sum(r["iou"] == "1" for r in recon_run[0].rows)
    simp, _, _ = run_recon(data_dir, simplify=True)
    on = sum(r["iou"] == "1" for r in simp.rows)
    ok = not more and not exact and (base - on) <= 5
    report(7, ok, f"zone count never grows ({merged} of {len(partition_run)} models shrink), "
                  f"exactness failures {len(exact)}, recon {base}% -> {on}%")
    assert ok


# ---- criterion 8


def test_criterion_8_determinism(data_dir, recon_run, ranking_run, report):
    _, recon_csv, _ = run_recon(data_dir)
    again, _, _ = run_ranking(data_dir)
    same_recon = recon_csv == recon_run[1]
    same_rank = {k: again[k][1] == ranking_run[0][k][1] for k in again}
    ok = same_recon and all(same_rank.values())
    report(8, ok, f"recon CSV identical: {same_recon}; rank CSVs identical: {same_rank}")
    assert ok
