"""Acceptance criteria 1-9.

Each test logs one PASS/FAIL line (collected again in the terminal summary).
Tolerances are the stated ones; calibrated margins are noted where they
were derived by simulation.
"""
import itertools
import json
import random
import sys

import numpy as np
import pytest

from alefx import (
    ale_first,
    ale_general,
    ale_general_uncentered,
    ale_second,
    extract_lower_order,
    m_effect,
    pd_effect,
)
from alefx.bridge import BridgeConfig, BridgePredictor
from alefx.cli import main as cli_main
from alefx.models import GeneratorSpec, generate_synthetic, parse_expression
from alefx.second import main_effect_extraction

from .conftest import make_data, record_criterion
from .oracles import ProductUniformOracle, example1_conditional_x2sq, gaussian_pair_ale
from .test_expr import random_tree, render

RHO = 0.5
FACTOR_TWO = (
    "the stated closed forms double the rho terms: E[X2 | X1 = z] = rho z integrates to "
    "(rho/2) z^2, so the true forms are (rho/2)(x1^2 - 1) and x1 x2 - (rho/2)(x1^2 + x2^2); "
    "see the companion checks"
)


def central(x, values, coverage=0.9):
    tail = (1 - coverage) / 2
    lo, hi = np.quantile(x, [tail, 1 - tail])
    return (values >= lo) & (values <= hi)


# -- criterion 1 ---------------------------------------------------------------

@pytest.fixture(scope="module")
def gaussian():
    data = generate_synthetic(GeneratorSpec("gaussian-pair", n=100000, seed=0, rho=RHO))
    f = parse_expression("x1*x2")
    curve = ale_first(f, data, 0, K=100)
    surf = ale_second(f, data, 0, 1, K=100)
    pd = pd_effect(f, data, [0], K=100)
    return data, curve, surf, pd


def main_effect_error(gaussian, scale):
    data, curve, _, _ = gaussian
    z = curve.breakpoints
    sel = central(data.column(0), z)
    return np.max(np.abs(curve.centered - scale * RHO * (z ** 2 - 1))[sel])


def surface_rmse(gaussian, form):
    _, _, surf, _ = gaussian
    zj, zl = surf.breakpoints
    Z1, Z2 = np.meshgrid(zj, zl, indexing="ij")
    inner = np.zeros(surf.centered.shape, dtype=bool)
    inner[1:-1, 1:-1] = True
    inner[1:, 1:] &= ~surf.empty
    err = (surf.centered - form(Z1, Z2))[inner]
    return np.sqrt(np.mean(err ** 2))


@pytest.mark.xfail(strict=True, reason=FACTOR_TWO)
def test_criterion_1a_ale_main_effect_stated_form(gaussian):
    err = main_effect_error(gaussian, 1.0)
    record_criterion("Criterion 1a ALE main effect vs rho(x1^2-1)", err <= 0.1,
                     f"sup error {err:.3f}, tol 0.1; expected failure: stated form is off by 2")
    assert err <= 0.1


def test_criterion_1a_ale_main_effect_corrected_form(gaussian):
    err = main_effect_error(gaussian, 0.5)
    record_criterion("Criterion 1a' ALE main effect vs (rho/2)(x1^2-1)", err <= 0.1, f"sup error {err:.3f}, tol 0.1")
    assert err <= 0.1


def test_criterion_1b_pd_flat(gaussian):
    _, _, _, pd = gaussian
    sup = np.max(np.abs(pd.values))
    record_criterion("Criterion 1b PD main effect sup-norm", sup <= 0.05, f"{sup:.4f}, tol 0.05")
    assert sup <= 0.05


@pytest.mark.xfail(strict=True, reason=FACTOR_TWO)
def test_criterion_1c_surface_stated_form(gaussian):
    rmse = surface_rmse(gaussian, lambda a, b: a * b - RHO * (a ** 2 + b ** 2 - 1))
    record_criterion("Criterion 1c ALE surface vs x1x2-rho(x1^2+x2^2-1)", rmse <= 0.1,
                     f"RMSE {rmse:.3f}, tol 0.1; expected failure: stated form is off by 2")
    assert rmse <= 0.1


def test_criterion_1c_surface_corrected_form(gaussian):
    rmse = surface_rmse(gaussian, lambda a, b: a * b - 0.5 * RHO * (a ** 2 + b ** 2))
    record_criterion("Criterion 1c' ALE surface vs x1x2-(rho/2)(x1^2+x2^2)", rmse <= 0.1,
                     f"RMSE {rmse:.3f}, tol 0.1")
    assert rmse <= 0.1


def test_criterion_1_corrected_form_matches_quadrature():
    x = np.linspace(-2.5, 2.5, 11)
    got = gaussian_pair_ale(lambda a, b: a * b, RHO, x)
    np.testing.assert_allclose(got, 0.5 * RHO * (x ** 2 - 1), atol=1e-6)
    assert np.max(np.abs(got - RHO * (x ** 2 - 1))) > 0.5


# -- criterion 2 ---------------------------------------------------------------

def test_criterion_2_additive_exactness():
    data = make_data(1000, 2, seed=2024, corr=0.8)
    f = parse_expression("3*x1 + 5*x2^2")
    c1 = ale_first(f, data, 0, K=50)
    c2 = ale_first(f, data, 1, K=50)
    surf = ale_second(f, data, 0, 1, K=20)
    a = np.max(np.abs(c1.uncentered - 3 * (c1.breakpoints - c1.breakpoints[0])))
    b = np.max(np.abs(surf.centered))
    Z1, Z2 = np.meshgrid(c1.breakpoints, c2.breakpoints, indexing="ij")
    c = np.ptp(c1.centered[:, None] + c2.centered[None, :] - (3 * Z1 + 5 * Z2 ** 2))
    ok = a <= 1e-10 and b <= 1e-10 and c <= 1e-10
    record_criterion("Criterion 2 additive exactness", ok, f"(a) {a:.1e} (b) {b:.1e} (c) {c:.1e}, tol 1e-10")
    assert ok


# -- criterion 3 ---------------------------------------------------------------

def test_criterion_3_example1_tree(tmp_path):
    # Margin 0.6 from benchmarks/calibrate_example1.py over 1000 seeds: per-seed
    # joint pass rate 0.94, so 8 of 10 seeds pass with probability about 0.98.
    passes, ratios = 0, []
    for seed in range(10):
        ok = True
        for feat in ("x1", "x2"):
            out = tmp_path / f"s{seed}{feat}"
            code = cli_main(["compare", "--data", "gen:example1,n=200", "--model", "tree:max_leaves=100",
                             "--features", feat, "--K", "40", "--seed", str(seed), "--out", str(out)])
            assert code == 0
            rmse = json.loads(out.with_name(out.name + ".report.json").read_text())["rmse"]
            ratio = rmse["ALE"] / rmse["PD"]
            ratios.append(ratio)
            ok &= ratio <= 0.6
        passes += ok
    record_criterion("Criterion 3 Example-1 ALE vs PD", passes >= 8,
                     f"{passes}/10 seeds with RMSE(ALE) <= 0.6 RMSE(PD) on x1 and x2; max ratio {max(ratios):.2f}")
    assert passes >= 8


# -- criterion 4 ---------------------------------------------------------------

def test_criterion_4_mplot_bias():
    data = generate_synthetic(GeneratorSpec("example1", n=200, seed=0))
    f = parse_expression("x1 + x2^2")
    m = m_effect(f, data, 0, K=40)
    ale = ale_first(f, data, 0, K=40)
    z = ale.breakpoints[1:]
    sel = central(data.column(0), z)
    m_slope = np.polyfit(z[sel], m.values[sel], 1)[0]
    ale_slope = np.polyfit(z[sel], ale.centered[1:][sel], 1)[0]
    oracle = np.array([x + example1_conditional_x2sq(x) for x in z[sel]])
    oracle_slope = np.polyfit(z[sel], oracle, 1)[0]
    ok = m_slope > 1.5 and abs(ale_slope - 1) <= 0.1 and oracle_slope > 1.5
    record_criterion("Criterion 4 M-plot bias", ok,
                     f"M slope {m_slope:.3f} (oracle {oracle_slope:.3f}) > 1.5, ALE slope {ale_slope:.3f} in 1 +- 0.1")
    assert ok


# -- criterion 5 ---------------------------------------------------------------

def test_criterion_5_centering_and_annihilation():
    data = make_data(600, 4, seed=5, corr=0.85)
    f = parse_expression("x1*x2*x3 + exp(x1/2)*x4^2 - x2^3*x4 + x3")
    worst = 0.0
    for j in range(4):
        c = ale_first(f, data, j, K=25)
        w = c.counts * c.centered[1:]
        worst = max(worst, abs(w.sum()) / max(1.0, np.abs(w).sum()))
    n_empty = 0
    for j, l in ((0, 1), (1, 3), (2, 0)):
        s = ale_second(f, data, j, l, K=12)
        n_empty += s.n_imputed
        w = s.counts * s.centered[1:, 1:]
        worst = max(worst, abs(w.sum()) / max(1.0, np.abs(w).sum()))
        for axis in (0, 1):
            worst = max(worst, np.max(np.abs(main_effect_extraction(s.main_removed, s.counts, axis))))
    for J in ((0, 1, 2), (1, 2, 3), (0, 1, 2, 3)):
        G = ale_general(f, data, J, K=4)
        n_empty += int(G.empty.sum())
        worst = max(worst, abs(G.weighted_mean()))
        for r in range(1, len(J)):
            for v in itertools.combinations(J, r):
                worst = max(worst, np.max(np.abs(extract_lower_order(G, v).values)))
    record_criterion("Criterion 5 centering and annihilation", worst <= 1e-10,
                     f"worst residual {worst:.1e} over grids with {n_empty} empty cells, tol 1e-10")
    assert worst <= 1e-10


# -- criterion 6 ---------------------------------------------------------------

def _rel(a, b):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300)


def test_criterion_6_reduction_consistency():
    rng = random.Random(6)
    worst, cases = 0.0, 0
    while cases < 20:
        data = make_data(rng.randint(50, 400), 3, seed=rng.randint(0, 10 ** 6), corr=rng.uniform(-0.9, 0.9))
        text = render(random_tree(rng, rng.randint(2, 4)))
        model = parse_expression(text)
        try:
            model.predict(data.values)
        except Exception:
            continue
        if "x1" not in text or "x2" not in text:
            continue
        K1, K2 = rng.randint(2, 40), [rng.randint(2, 15), rng.randint(2, 15)]
        try:
            curve = ale_first(model, data, 0, K=K1)
            surf = ale_second(model, data, 0, 1, K=K2)
        except Exception:
            continue
        g1 = ale_general(model, data, [0], K=K1)
        g2 = ale_general(model, data, [0, 1], K=K2)
        u2 = ale_general_uncentered(model, data, [0, 1], K=K2)
        for a, b in ((g1.values, curve.centered), (g2.values, surf.centered), (u2.values, surf.uncentered)):
            if np.max(np.abs(b)) > 0:
                worst = max(worst, _rel(a, b))
        cases += 1
    record_criterion("Criterion 6 reduction consistency", worst <= 1e-12,
                     f"20 random cases, worst relative gap {worst:.1e}, tol 1e-12")
    assert worst <= 1e-12


# -- criterion 7 ---------------------------------------------------------------

def test_criterion_7_evaluation_counts():
    bad = []
    for n in (50, 137, 400):
        data = make_data(n, 3, seed=n, corr=0.3)
        for K in (2, 5, 9):
            for r in (1, 2, 3):
                J = list(range(r))
                f = parse_expression("x1*x2 + x3")
                ale_general(f, data, J, K=K)
                if f.ledger.total_rows_predicted != 2 ** r * n:
                    bad.append(("ALE", n, K, r))
                g = parse_expression("x1*x2 + x3")
                pd_effect(g, data, J, K=K)
                if g.ledger.total_rows_predicted != K ** r * n:
                    bad.append(("PD", n, K, r))
    record_criterion("Criterion 7 evaluation counts", not bad,
                     f"27 (n, K, |J|) cases, mismatches: {bad or 'none'}")
    assert not bad


# -- criterion 8 ---------------------------------------------------------------

def test_criterion_8_bridge_equivalence():
    data = generate_synthetic(GeneratorSpec("example1", n=500, seed=0))
    cfg = BridgeConfig("subprocess", (sys.executable, "-m", "alefx", "serve", "--model", "expr:x1 + x2^2"),
                       batch_size=300)
    worst = 0.0
    with BridgePredictor(cfg, columns=data.columns) as remote:
        for j in (0, 1):
            a = ale_first(remote, data, j, K=40)
            b = ale_first(parse_expression("x1 + x2^2"), data, j, K=40)
            worst = max(worst, np.max(np.abs(a.centered - b.centered)), np.max(np.abs(a.uncentered - b.uncentered)))
        ledger = remote.ledger.total_rows_predicted
    ok = worst <= 1e-12 and ledger == 4 * data.n
    record_criterion("Criterion 8 bridge equivalence", ok, f"max gap {worst:.1e}, tol 1e-12; bridged rows {ledger}")
    assert ok


# -- criterion 9 ---------------------------------------------------------------

def test_criterion_9_third_order_oracle():
    # Calibrated: RMSE 0.046-0.048 over seeds 0-4, dominated by the upper-edge
    # bias of the lower-order extraction at K=10.
    data = generate_synthetic(GeneratorSpec("product-cube", n=50000, seed=0, d=3))
    G = ale_general(parse_expression("x1*x2*x3"), data, (0, 1, 2), K=10)
    oracle = ProductUniformOracle(3).effect(lambda X: np.prod(X[:, :3], axis=1), (0, 1, 2))
    inner = [b[1:-1] for b in G.breakpoints]
    mesh = np.meshgrid(*inner, indexing="ij")
    ref = oracle(np.stack([m.ravel() for m in mesh], axis=1)).reshape(mesh[0].shape)
    est = G.values[1:-1, 1:-1, 1:-1]
    keep = ~G.empty[:-1, :-1, :-1]
    rmse = np.sqrt(np.mean((est - ref)[keep] ** 2))
    record_criterion("Criterion 9 third-order quadrature oracle", rmse <= 0.05,
                     f"RMSE {rmse:.4f} on {keep.sum()} interior corners, tol 0.05")
    assert rmse <= 0.05
