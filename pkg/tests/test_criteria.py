import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import frozen
import oracle
from icmonogamy.boxes import (
    BipartiteBox,
    all_local_deterministic_tripartite,
    deterministic_bipartite,
    isotropic_box,
    pr_box,
    slice_box,
    white_noise_bipartite,
    xor_game_box,
)
from icmonogamy.criteria import (
    ICReport,
    all_classical_bipartite_strategies,
    bipartite_rac_joint,
    classical_tripartite_strategies,
    eval_ic_bipartite_limit,
    eval_ic_generalized,
    eval_ic_original,
    eval_ic_tripartite,
    evaluate,
    original_margin_closed_form,
    tripartite_rac_joint,
)
from icmonogamy.entropy import ChannelSpec, conditional_mutual_information, correlation_capacity, mutual_information

SQ = 1 / math.sqrt(2)


def test_bipartite_joint_examples():
    for i in (1, 2):
        j = bipartite_rac_joint(pr_box(), 0.0, i)
        assert j.marginal([f"X{i}", "G"]).probs[0, 1] == 0 and j.marginal([f"X{i}", "G"]).probs[1, 0] == 0
        assert mutual_information(bipartite_rac_joint(white_noise_bipartite(), 0.3, i), [f"X{i}"], ["G"]) == 0
        mi = mutual_information(bipartite_rac_joint(isotropic_box(SQ), 0.0, i), [f"X{i}"], ["G"])
        assert mi == pytest.approx(frozen.ISOTROPIC_TSIRELSON_MI, abs=1e-14)


def test_original_examples():
    r = eval_ic_original(pr_box(), 0.0)
    assert abs(r.lhs - 2) < 1e-12 and abs(r.rhs - 1) < 1e-12 and r.violated
    # classical: send X1, guess the received bit
    r = eval_ic_original(white_noise_bipartite(), 0.0, encoder=lambda x1, x2, a: x1, decoder=lambda mp, b, y: mp)
    assert r.lhs == pytest.approx(1) and r.rhs == 1 and not r.violated
    for d in (1e-2, 1e-3, 1e-4):
        assert eval_ic_original(isotropic_box(0.9), 0.5 - d).violated


@pytest.mark.parametrize("alpha,eps", [(0.3, 0.1), (0.8, 0.37), (SQ, 0.2), (1.0, 0.45)])
def test_original_matches_oracle(alpha, eps):
    lhs = float(oracle.van_dam_lhs(oracle.isotropic_p(alpha), eps))
    assert eval_ic_original(isotropic_box(alpha), eps).lhs == pytest.approx(lhs, abs=1e-14)


def test_original_closed_form():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = rng.uniform(0, 1)
        eps = rng.uniform(0, 0.49)
        box = isotropic_box(a)
        assert eval_ic_original(box, eps).margin == pytest.approx(original_margin_closed_form(a, a, eps), abs=1e-13)


def test_generalized_examples():
    classical = dict(encoder=lambda x1, x2, a: x1, decoder=lambda mp, b, y: mp)
    r = eval_ic_generalized(white_noise_bipartite(), 0.0, **classical)
    assert not r.violated and r.rhs == pytest.approx(1.0)
    printed = eval_ic_generalized(white_noise_bipartite(), 0.0, "printed", **classical)
    assert printed.violated and printed.rhs == pytest.approx(0.0)
    assert eval_ic_generalized(pr_box(), 0.0).violated
    # white noise: the box-dependent terms reduce to what M' alone carries
    for eps in (0.0, 0.2):
        noise = eval_ic_generalized(white_noise_bipartite(), eps)
        only_m = eval_ic_generalized(white_noise_bipartite(), eps, decoder=lambda mp, b, y: mp)
        assert noise.lhs == pytest.approx(only_m.lhs, abs=1e-14)
        assert not noise.violated
    with pytest.raises(ValueError):
        eval_ic_generalized(pr_box(), 0.0, "other")


def test_limit_proxy():
    assert eval_ic_bipartite_limit(pr_box()) == 1.0
    assert abs(eval_ic_bipartite_limit(isotropic_box(SQ))) < 1e-12
    assert eval_ic_bipartite_limit(white_noise_bipartite()) == -1.0


@given(st.floats(0, 1), st.sampled_from([1e-3, 1e-4, 1e-5]))
@settings(max_examples=60)
def test_limit_proxy_sign_agrees(alpha, delta):
    box = isotropic_box(alpha)
    proxy = eval_ic_bipartite_limit(box)
    if abs(proxy) > 1e-6:
        r = eval_ic_original(box, 0.5 - delta)
        assert (r.scaled_margin > 0) == (proxy > 0)


def test_tripartite_joint_examples():
    j = tripartite_rac_joint(xor_game_box(), 0, 0, 1)
    m = j.marginal(["X1^1", "X1^2", "G"]).probs
    for u, v in itertools.product((0, 1), repeat=2):
        assert m[u, v, u ^ v] == pytest.approx(0.25)
    for jj in (1, 2):
        for k in (1, 2):
            jt = tripartite_rac_joint(slice_box(0, 0), 0.1, 0.3, jj)
            assert mutual_information(jt, [f"X{jj}^{k}"], [f"X{jj}^{3 - k}", "M1p", "M2p", "G"]) < 1e-15
    r = eval_ic_tripartite(slice_box(1, 0), 0, 0, sender=1)
    assert [v for _, v in r.lhs_terms] == pytest.approx([1.0, 1.0], abs=1e-14)
    # G_j = X_j^1 xor M2'
    jt = tripartite_rac_joint(slice_box(1, 0), 0, 0, 1)
    m = jt.marginal(["X1^1", "M2p", "G"]).probs
    assert m[0, 0, 1] == 0 and m[1, 1, 1] == 0 and m[0, 1, 0] == 0


def test_tripartite_examples():
    r = eval_ic_tripartite(xor_game_box(), 0, 0)
    assert abs(r.lhs - 4) < 1e-10 and abs(r.rhs - 2) < 1e-10 and r.violated
    assert len(r.lhs_terms) == 4
    r = eval_ic_tripartite(slice_box(0, 0), 0.2, 0.1)
    assert r.lhs < 1e-15 and not r.violated
    assert r.rhs == pytest.approx(ChannelSpec(0.2).capacity + ChannelSpec(0.1).capacity)


@pytest.mark.parametrize("key", list(frozen.TRIPARTITE_MARGINS))
def test_tripartite_frozen(key):
    a, g, e1, e2 = key
    s1, s2, total = frozen.TRIPARTITE_MARGINS[key]
    box = slice_box(a, g)
    assert eval_ic_tripartite(box, e1, e2, sender=1).margin == pytest.approx(s1, abs=1e-13)
    assert eval_ic_tripartite(box, e1, e2, sender=2).margin == pytest.approx(s2, abs=1e-13)
    assert eval_ic_tripartite(box, e1, e2).margin == pytest.approx(total, abs=1e-13)


@pytest.mark.parametrize("key", list(frozen.SENDER1_SCALED_1E5))
def test_sender_limit_ratio(key):
    a, g = key
    r = eval_ic_tripartite(slice_box(a, g), 0.5 - 1e-5, 0.0, sender=1)
    assert r.scaled_margin == pytest.approx(frozen.SENDER1_SCALED_1E5[key], abs=1e-10)
    assert r.scaled_margin == pytest.approx(2 * a * a / (1 - g * g) - 1, abs=1e-9)


def test_result1_point_violates():
    r = eval_ic_tripartite(slice_box(SQ, 0.05), 0.5 - 1e-5, 0.0, sender=1)
    assert r.scaled_margin > 1e-3


def test_summed_and_sender_forms_consistent():
    rng = np.random.default_rng(8)
    for _ in range(10):
        a, g = rng.dirichlet([1, 1, 1])[:2]
        e1, e2 = rng.uniform(0, 0.49, 2)
        box = slice_box(a, g)
        total = eval_ic_tripartite(box, e1, e2)
        parts = [eval_ic_tripartite(box, e1, e2, sender=k) for k in (1, 2)]
        assert total.lhs == pytest.approx(parts[0].lhs + parts[1].lhs, abs=1e-13)
        assert total.rhs == pytest.approx(parts[0].rhs + parts[1].rhs, abs=1e-15)


@given(st.tuples(st.floats(0, 1), st.floats(0, 1)).filter(lambda t: sum(t) <= 1),
       st.floats(0, 0.49), st.floats(0, 0.49))
@settings(max_examples=40)
def test_slice_symmetry(pt, e1, e2):
    a, g = pt
    r = eval_ic_tripartite(slice_box(a, g), e1, e2)
    s = eval_ic_tripartite(slice_box(g, a), e2, e1)
    assert abs(r.lhs - s.lhs) < 1e-10


@pytest.mark.parametrize("a,g,e1,e2", [(0.3, 0.4, 0.1, 0.25), (0.7, 0.1, 0.0, 0.45), (0.0, 1.0, 0.2, 0.0)])
def test_shielding_and_capacity(a, g, e1, e2):
    box = slice_box(a, g)
    for j in (1, 2):
        jt = tripartite_rac_joint(box, e1, e2, j)
        for k, eps in ((1, e1), (2, e2)):
            upstream = [v for v in jt.variables if v not in (f"M{k}", f"M{k}p", "G")]
            assert conditional_mutual_information(jt, [f"M{k}p"], upstream, [f"M{k}"]) < 1e-10
            assert abs(mutual_information(jt, [f"M{k}"], [f"M{k}p"]) - correlation_capacity(1 - 2 * eps)) < 1e-10
    for i in (1, 2):
        bj = bipartite_rac_joint(box.marginal_ab(), e1, i)
        assert conditional_mutual_information(bj, ["Mp"], ["X1", "X2"], ["M"]) < 1e-10
        assert abs(mutual_information(bj, ["M"], ["Mp"]) - correlation_capacity(1 - 2 * e1)) < 1e-10


EPS_GRID = [0.0, 0.1, 0.3, 0.49]


def test_classical_bipartite_never_violates():
    boxes = [white_noise_bipartite(), pr_box(), deterministic_bipartite((0, 1), (1, 0))]
    for strat in all_classical_bipartite_strategies():
        for eps in EPS_GRID:
            for box in boxes:
                assert eval_ic_original(box, eps, **strat).margin <= 1e-9
                assert eval_ic_generalized(box, eps, **strat).margin <= 1e-9


def test_classical_tripartite_never_violates():
    rng = np.random.default_rng(6)
    strategies = classical_tripartite_strategies()
    picks = rng.choice(len(strategies), 300, replace=False)
    box = slice_box(0.4, 0.4)
    for idx in picks:
        for e1, e2 in [(0, 0), (0.1, 0.3), (0.49, 0)]:
            for sender in (None, 1, 2):
                r = eval_ic_tripartite(box, e1, e2, sender=sender, **strategies[idx])
                assert r.margin <= 1e-9


def test_local_boxes_never_violate():
    # local deterministic boxes with the standard protocol are classical strategies
    for box in all_local_deterministic_tripartite()[::5]:
        for e1, e2 in [(0, 0), (0.2, 0.05)]:
            assert eval_ic_tripartite(box, e1, e2).margin <= 1e-9
            for k in (1, 2):
                assert eval_ic_tripartite(box, e1, e2, sender=k).margin <= 1e-9
        for eps in EPS_GRID:
            assert eval_ic_original(box.marginal_ab(), eps).margin <= 1e-9


def test_noise_monotone_sign():
    for alpha in (0.5, 0.9, 0.95):
        signs = {eval_ic_original(isotropic_box(alpha), 0.5 - d).scaled_margin > 0 for d in (1e-2, 1e-3, 1e-4)}
        assert len(signs) == 1


def test_report_fields_and_serialization():
    r = eval_ic_tripartite(slice_box(0.3, 0.2), 0.1, 0.2)
    assert abs(r.lhs - sum(v for _, v in r.lhs_terms)) < 1e-10
    assert r.status == "satisfied"
    rec = r.to_record()
    assert "criterion = tripartite" in rec and "margin =" in rec
    row = r.to_csv_row(0.3, 0.2)
    assert len(row) == len(ICReport.CSV_HEADER) and row[0] == "tripartite" and row[-1] == "false"
    near = ICReport("original", (("t", 1.0 + 5e-10),), 1.0 + 5e-10, 1.0, ())
    assert near.status == "inconclusive" and not near.violated
    assert evaluate("tripartite-sender2", slice_box(0.1, 0.1), 0.1, 0.1).criterion == "tripartite-sender2"
    with pytest.raises(ValueError):
        evaluate("nope", pr_box(), 0.1)
