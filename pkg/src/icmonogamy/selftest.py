"""Fast invariant checks behind ``icmonogamy selftest``."""
from __future__ import annotations

import math

import numpy as np

from .boxes import (
    TripartiteBox,
    all_local_deterministic_tripartite,
    chsh_ab,
    chsh_be,
    depolarize,
    isotropic_box,
    pr_box,
    slice_box,
    xor_game_box,
)
from .criteria import eval_ic_bipartite_limit, eval_ic_original, eval_ic_tripartite, tripartite_rac_joint
from .curves import reference_threshold
from .entropy import (
    JointTable,
    conditional_mutual_information,
    correlation_capacity,
    mutual_information,
)
from .wiring import IDENTITY, XOR, apply_wiring


def _random_table(rng, n):
    p = rng.dirichlet(np.ones(2 ** n))
    return JointTable([f"V{i}" for i in range(n)], p)


def _chain_rule(rng) -> bool:
    for _ in range(100):
        j = _random_table(rng, 4)
        lhs = mutual_information(j, ["V0"], ["V1", "V2"])
        rhs = mutual_information(j, ["V0"], ["V2"]) + conditional_mutual_information(j, ["V0"], ["V1"], ["V2"])
        if abs(lhs - rhs) > 1e-10:
            return False
    return True


def _depolarize(rng) -> bool:
    locs = all_local_deterministic_tripartite()
    for _ in range(20):
        w = rng.dirichlet(np.ones(6))
        picks = rng.choice(len(locs), 5, replace=False)
        p = sum(wi * locs[k].probs for wi, k in zip(w[:5], picks)) + w[5] * slice_box(1, 0).probs
        box = TripartiteBox(p)
        d = depolarize(box)
        if max(abs(chsh_ab(d) - max(chsh_ab(box), 1 - chsh_ab(box))), abs(chsh_be(d) - max(chsh_be(box), 1 - chsh_be(box)))) > 1e-12:
            return False
        if d.distance(depolarize(d)) > 1e-12:
            return False
    return True


def _shielding() -> bool:
    box = slice_box(0.6, 0.3)
    for j in (1, 2):
        jt = tripartite_rac_joint(box, 0.2, 0.35, j)
        for k, eps in ((1, 0.2), (2, 0.35)):
            # everything except the guess, which is computed from M_k'
            rest = [v for v in jt.variables if v not in (f"M{k}", f"M{k}p", "G")]
            if conditional_mutual_information(jt, [f"M{k}p"], rest, [f"M{k}"]) > 1e-10:
                return False
            if abs(mutual_information(jt, [f"M{k}"], [f"M{k}p"]) - correlation_capacity(1 - 2 * eps)) > 1e-10:
                return False
    return True


CHECKS = [
    ("PR box original criterion lhs 2 rhs 1", lambda rng: abs(eval_ic_original(pr_box(), 0).lhs - 2) < 1e-12),
    ("XOR game tripartite lhs 4 rhs 2", lambda rng: abs(eval_ic_tripartite(xor_game_box(), 0, 0).lhs - 4) < 1e-10),
    ("Tsirelson proxy zero", lambda rng: abs(eval_ic_bipartite_limit(isotropic_box(1 / math.sqrt(2)))) < 1e-12),
    ("XOR wiring yields PR", lambda rng: apply_wiring(xor_game_box(), XOR).distance(pr_box()) < 1e-12),
    ("identity wiring yields AB marginal", lambda rng: apply_wiring(slice_box(0.3, 0.4), IDENTITY).distance(slice_box(0.3, 0.4).marginal_ab()) < 1e-12),
    ("chain rule", _chain_rule),
    ("depolarize idempotent and CHSH preserving", _depolarize),
    ("channel shielding and capacity", lambda rng: _shielding()),
    ("NS threshold 0.881", lambda rng: abs(reference_threshold("ns").beta - 0.881) < 1e-3),
    ("quantum threshold 0.841", lambda rng: abs(reference_threshold("quantum").beta - 0.841) < 1e-3),
]


def run(emit=print) -> bool:
    rng = np.random.default_rng(12345)
    ok = True
    for name, fn in CHECKS:
        passed = bool(fn(rng))
        ok &= passed
        emit(f"{'PASS' if passed else 'FAIL'} {name}")
    return ok
