import csv

import numpy as np
import pytest
from hypothesis import given, strategies as st

from icmonogamy.boxes import (
    TripartiteBox,
    all_local_deterministic_tripartite,
    chsh,
    pr_box,
    slice_box,
    white_noise_bipartite,
    xor_game_box,
)
from icmonogamy.criteria import eval_ic_bipartite_limit, eval_ic_original
from icmonogamy.wiring import (
    IDENTITY,
    N_WIRINGS,
    XOR,
    Wiring,
    apply_wiring,
    best_wired_violation,
    bias_array,
    dedupe,
    effective_boxes,
    enumerate_wirings,
    make_wiring,
    ranked_wirings,
    slice_wired_proxy,
    write_margins_csv,
)


@pytest.fixture(scope="module")
def random_ns_box():
    rng = np.random.default_rng(21)
    locs = all_local_deterministic_tripartite()
    w = rng.dirichlet(np.ones(10))
    p = sum(wi * locs[k].probs for wi, k in zip(w[:8], rng.choice(64, 8, replace=False)))
    p = p + w[8] * xor_game_box().probs + w[9] * slice_box(0, 1).probs
    return TripartiteBox(p)


def test_enumeration_count_and_identity():
    seen = 0
    has_identity = False
    for i, w in enumerate(enumerate_wirings()):
        seen += 1
        if w == IDENTITY:
            has_identity = True
    assert seen == N_WIRINGS == 262144
    assert has_identity
    assert len({Wiring.from_index(i) for i in range(0, N_WIRINGS, 997)}) == len(range(0, N_WIRINGS, 997))


@given(st.integers(0, N_WIRINGS - 1))
def test_index_and_hex_round_trip(i):
    w = Wiring.from_index(i)
    assert w.index == i
    assert Wiring.from_hex(w.to_hex()) == w


def test_wiring_rejects_bad_tables():
    with pytest.raises(ValueError):
        Wiring(4, 0, 0, 0, 0)
    with pytest.raises(ValueError):
        Wiring.from_hex("1-2-3")


def test_identity_wiring_is_marginal():
    for a, g in [(0.3, 0.4), (0.8, 0.2), (1, 0)]:
        box = slice_box(a, g)
        wired = apply_wiring(box, IDENTITY)
        assert wired.isclose(box.marginal_ab())
        assert chsh(wired) == pytest.approx((1 + a) / 2, abs=1e-15)
        assert eval_ic_original(wired, 0.2).margin == pytest.approx(eval_ic_original(box.marginal_ab(), 0.2).margin, abs=1e-15)


def test_xor_wiring_collapses_game_to_pr():
    assert apply_wiring(xor_game_box(), XOR).distance(pr_box()) < 1e-15
    # with z = y' the grouped output obeys a' + b' = x'y' + y', a relabelled PR box
    literal = make_wiring(lambda x: x, lambda a: a, lambda yp, z, e: yp, lambda yp: yp, lambda b, e: b ^ e)
    wired = apply_wiring(xor_game_box(), literal)
    assert eval_ic_bipartite_limit(wired) == pytest.approx(1.0)
    for x in (0, 1):
        for y in (0, 1):
            for a in (0, 1):
                assert wired.probs[x, y, a, a ^ (x * y) ^ y] == pytest.approx(0.5)


def test_any_wiring_on_noise_is_uncorrelated():
    eff = effective_boxes(slice_box(0, 0))
    prod = np.einsum("nxya,nxyb->nxyab", eff.sum(axis=4), eff.sum(axis=3))
    assert np.abs(eff - prod).max() < 1e-15
    # balanced output maps (a bijective F2, a balanced F5) give exactly white noise
    balanced = [i for i in range(0, N_WIRINGS, 101)
                if Wiring.from_index(i).f2 in (1, 2) and bin(Wiring.from_index(i).f5).count("1") == 2]
    assert np.abs(eff[balanced] - 0.25).max() < 1e-15
    assert np.abs(eff[IDENTITY.index] - white_noise_bipartite().probs).max() < 1e-15


def test_vectorised_matches_direct(random_ns_box):
    rng = np.random.default_rng(0)
    for bp in ("A|BE", "E|AB", "B|AE"):
        eff = effective_boxes(random_ns_box, bp)
        for i in rng.integers(0, N_WIRINGS, 150):
            assert np.abs(apply_wiring(random_ns_box, Wiring.from_index(int(i)), bp).probs - eff[i]).max() < 1e-15


@pytest.mark.parametrize("bp", ["A|BE", "E|AB"])
def test_all_wired_boxes_normalised_and_no_signaling(random_ns_box, bp):
    eff = effective_boxes(random_ns_box, bp)
    assert np.abs(eff.sum(axis=(3, 4)) - 1).max() < 1e-12
    a_marg = eff.sum(axis=4)  # [w, x', y', a']
    b_marg = eff.sum(axis=3)  # [w, x', y', b']
    assert np.abs(a_marg[:, :, 0] - a_marg[:, :, 1]).max() < 1e-10
    assert np.abs(b_marg[:, 0] - b_marg[:, 1]).max() < 1e-10
    chsh_vals = 0.25 * (eff[:, 0, 0, 0, 0] + eff[:, 0, 0, 1, 1] + eff[:, 0, 1, 0, 0] + eff[:, 0, 1, 1, 1]
                        + eff[:, 1, 0, 0, 0] + eff[:, 1, 0, 1, 1] + eff[:, 1, 1, 0, 1] + eff[:, 1, 1, 1, 0])
    assert chsh_vals.max() <= 1 + 1e-12


def test_dedupe_far_fewer_than_all():
    eff = effective_boxes(slice_box(0.5, 0.4))
    uniq, first = dedupe(eff)
    assert len(uniq) < N_WIRINGS // 10
    assert first[0] == 0 and np.all(np.diff(first) > 0)
    # every wiring's box is within quantisation of a kept representative
    assert np.array_equal(np.unique(np.round(eff.reshape(N_WIRINGS, -1) / 1e-12), axis=0).shape, (len(uniq), 16))


def test_best_wired_examples():
    r = best_wired_violation(xor_game_box(), "original", 0.0)
    assert r.value == pytest.approx(1.0, abs=1e-12)
    assert r.report.lhs == pytest.approx(2.0) and r.report.rhs == pytest.approx(1.0)
    assert eval_ic_bipartite_limit(apply_wiring(xor_game_box(), r.wiring)) == pytest.approx(1.0)
    for eps in (0.0, 0.2, 0.45):
        assert best_wired_violation(slice_box(0, 0), "original", eps).value <= 1e-12
    assert best_wired_violation(slice_box(0.8, 0.2), limit=True).value > 0.2
    g = best_wired_violation(slice_box(0.9, 0.05), "generalized", 0.1)
    assert g.value > 0 and g.report.criterion == "generalized"


def test_tie_break_lowest_index():
    r = best_wired_violation(slice_box(0, 0), "original", 0.3)
    # every wiring gives margin <= 0; constant wirings reach 0, the lowest is index 0
    assert r.wiring.index == 0
    ranked, _ = ranked_wirings(slice_box(0.0, 1.0), None, bipartition="E|AB", top_k=3)
    idx = [w.index for w, _ in ranked]
    assert idx == sorted(idx)


def test_determinism():
    a = best_wired_violation(slice_box(0.6, 0.3), "original", 0.4)
    b = best_wired_violation(slice_box(0.6, 0.3), "original", 0.4)
    assert a.wiring == b.wiring and a.value == b.value


def test_slice_proxy_matches_full_enumeration():
    for a, g in [(0.8, 0.2), (0.0, 0.75), (0.5, 0.4)]:
        fast = slice_wired_proxy(a, g)[0]
        full = max(best_wired_violation(slice_box(a, g), limit=True, bipartition=bp).value for bp in ("A|BE", "E|AB"))
        assert fast == pytest.approx(full, abs=1e-12)


def test_limit_mode_examples():
    assert slice_wired_proxy(0.0, 1.0)[0] == pytest.approx(1.0)
    assert slice_wired_proxy(0.9, 0.0)[0] == pytest.approx(2 * 0.81 - 1)
    assert slice_wired_proxy(0.0, 0.0)[0] <= 0


def test_margins_csv(tmp_path):
    path = tmp_path / "m.csv"
    write_margins_csv(slice_box(0.3, 0.3), None, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == N_WIRINGS + 1
    assert rows[0][-1] == "proxy"
    assert rows[1 + IDENTITY.index][1] == IDENTITY.to_hex()
