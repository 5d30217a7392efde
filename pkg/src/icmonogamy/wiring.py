"""Deterministic wirings collapsing a tripartite box onto a bipartition.

For the bipartition A | BE the grouped party B' receives y', sets
``z = F4(y')``, reads ``e``, then sets ``y = F3(y', z, e)``, reads ``b`` and
outputs ``b' = F5(b, e)``; A sets ``x = F1(x')`` and outputs ``a' = F2(a)``.

Truth tables are stored as integers: bit ``v`` of the table is the output on
the input whose bits, most significant first, are the listed arguments.  The
wiring index packs ``f1 | f2 | f3 | f4 | f5`` with ``f1`` most significant.
"""
from __future__ import annotations

import csv
import functools
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .boxes import BipartiteBox, TripartiteBox, pr_box, slice_box
from .criteria import VIOLATION_TOL, ICReport, eval_ic_bipartite_limit, eval_ic_generalized, eval_ic_original
from .entropy import correlation_capacity, phi_array, LN2

_WIDTHS = (2, 2, 8, 2, 4)  # truth-table sizes of F1..F5
N_WIRINGS = 1 << sum(_WIDTHS)
BIPARTITIONS = ("A|BE", "E|AB", "B|AE")


@dataclass(frozen=True)
class Wiring:
    f1: int
    f2: int
    f3: int
    f4: int
    f5: int

    def __post_init__(self):
        for name, t, w in zip("f1 f2 f3 f4 f5".split(), self.tables, _WIDTHS):
            if not 0 <= t < (1 << w):
                raise ValueError(f"{name} table {t} does not fit {w} entries")

    @property
    def tables(self) -> tuple[int, ...]:
        return (self.f1, self.f2, self.f3, self.f4, self.f5)

    @property
    def index(self) -> int:
        i = 0
        for t, w in zip(self.tables, _WIDTHS):
            i = (i << w) | t
        return i

    @classmethod
    def from_index(cls, index: int) -> "Wiring":
        if not 0 <= index < N_WIRINGS:
            raise ValueError(f"wiring index {index} out of range")
        out = []
        for w in reversed(_WIDTHS):
            out.append(index & ((1 << w) - 1))
            index >>= w
        return cls(*reversed(out))

    def to_hex(self) -> str:
        return "-".join(format(t, "x") for t in self.tables)

    @classmethod
    def from_hex(cls, text: str) -> "Wiring":
        parts = text.strip().split("-")
        if len(parts) != 5:
            raise ValueError(f"expected five hex tables, got {text!r}")
        return cls(*(int(p, 16) for p in parts))

    def F1(self, x):
        return (self.f1 >> x) & 1

    def F2(self, a):
        return (self.f2 >> a) & 1

    def F3(self, yp, z, e):
        return (self.f3 >> (4 * yp + 2 * z + e)) & 1

    def F4(self, yp):
        return (self.f4 >> yp) & 1

    def F5(self, b, e):
        return (self.f5 >> (2 * b + e)) & 1


def _table(fn, nargs: int) -> int:
    t = 0
    for v in range(1 << nargs):
        args = [(v >> (nargs - 1 - k)) & 1 for k in range(nargs)]
        t |= fn(*args) << v
    return t


def make_wiring(F1, F2, F3, F4, F5) -> Wiring:
    """Build a wiring from five Python callables."""
    return Wiring(_table(F1, 1), _table(F2, 1), _table(F3, 3), _table(F4, 1), _table(F5, 2))


IDENTITY = make_wiring(lambda x: x, lambda a: a, lambda yp, z, e: yp, lambda yp: yp, lambda b, e: b)
# collapses the tripartite XOR game onto an exact PR box; z must not depend on y'
XOR = make_wiring(lambda x: x, lambda a: a, lambda yp, z, e: yp, lambda yp: 0, lambda b, e: b ^ e)


def enumerate_wirings() -> Iterator[Wiring]:
    for i in range(N_WIRINGS):
        yield Wiring.from_index(i)


def _mirror(box: TripartiteBox, bipartition: str) -> TripartiteBox:
    # reorder parties so that the lone party sits in slot A, the grouped pair in (B, E)
    if bipartition == "A|BE":
        return box
    if bipartition == "E|AB":
        return box.permute_parties((2, 1, 0))
    if bipartition == "B|AE":
        return box.permute_parties((1, 0, 2))
    raise ValueError(f"unknown bipartition {bipartition!r}; choose from {BIPARTITIONS}")


def apply_wiring(box: TripartiteBox, w: Wiring, bipartition: str = "A|BE") -> BipartiteBox:
    p = _mirror(box, bipartition).probs
    out = np.zeros((2, 2, 2, 2))
    for xp in (0, 1):
        x = w.F1(xp)
        for yp in (0, 1):
            z = w.F4(yp)
            for a in (0, 1):
                for e in (0, 1):
                    y = w.F3(yp, z, e)
                    for b in (0, 1):
                        out[xp, yp, w.F2(a), w.F5(b, e)] += p[x, y, z, a, b, e]
    return BipartiteBox(out, check=False)


# --- vectorised evaluation over all wirings -----------------------------

def _bits(values: np.ndarray, width: int) -> np.ndarray:
    return (values[:, None] >> np.arange(width)) & 1


@functools.lru_cache(maxsize=1)
def _b_side_tables():
    s = np.arange(1 << 14)
    f3 = _bits(s >> 6, 8)
    f4 = _bits((s >> 4) & 3, 2)
    f5 = _bits(s & 15, 4)
    yp = np.arange(2)
    z = f4  # (S, y')
    e = np.arange(2)
    # y[s, y', e] = f3[s, 4 y' + 2 z[s, y'] + e]
    idx = 4 * yp[None, :, None] + 2 * z[:, :, None] + e[None, None, :]
    y = np.take_along_axis(f3, idx.reshape(len(s), -1), axis=1).reshape(len(s), 2, 2)
    # onehot[s, b, e, b']
    bprime = f5.reshape(len(s), 2, 2)
    onehot = np.stack([1 - bprime, bprime], axis=-1).astype(float)
    return y, z, onehot


def effective_boxes(box: TripartiteBox, bipartition: str = "A|BE") -> np.ndarray:
    """All ``N_WIRINGS`` effective boxes, shape ``(N_WIRINGS, 2, 2, 2, 2)`` as ``[w, x', y', a', b']``."""
    p = _mirror(box, bipartition).probs
    y, z, onehot = _b_side_tables()
    S = y.shape[0]
    # pt[y, z, e, x, a, b]
    pt = np.transpose(p, (1, 2, 5, 0, 3, 4))
    sel = pt[y, z[:, :, None], np.arange(2)[None, None, :]]  # (S, y', e, x, a, b)
    R = np.einsum("spexab,sbec->sxapc", sel, onehot)  # (S, x, a, y', b')
    out = np.empty((4, 4, S, 2, 2, 2, 2))
    for f1 in range(4):
        xs = [(f1 >> xp) & 1 for xp in (0, 1)]
        Rx = R[:, xs]  # (S, x', a, y', b')
        for f2 in range(4):
            a_out = [(f2 >> a) & 1 for a in (0, 1)]
            acc = np.zeros((S, 2, 2, 2, 2))  # (S, x', a', y', b')
            for a in (0, 1):
                acc[:, :, a_out[a]] += Rx[:, :, a]
            out[f1, f2] = np.transpose(acc, (0, 1, 3, 2, 4))
    return out.reshape(N_WIRINGS, 2, 2, 2, 2)


def bias_array(eff: np.ndarray) -> np.ndarray:
    """Guessing biases ``(E_0, E_1)`` of each effective box, shape ``(n, 2)``."""
    sign_ab = np.array([[1.0, -1.0], [-1.0, 1.0]])
    corr = np.einsum("nxyab,ab->nxy", eff, sign_ab)
    e0 = 0.5 * (corr[:, 0, 0] + corr[:, 1, 0])
    e1 = 0.5 * (corr[:, 0, 1] - corr[:, 1, 1])
    return np.stack([e0, e1], axis=1)


def quantize(arr: np.ndarray, step: float = 1e-12) -> np.ndarray:
    return np.round(arr / step).astype(np.int64)


def dedupe(rows: np.ndarray, step: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Unique rows (quantised at ``step``) and, for each, the lowest wiring index producing it."""
    q = quantize(rows.reshape(len(rows), -1), step)
    _, first = np.unique(q, axis=0, return_index=True)
    first = np.sort(first)
    return rows[first], first


@dataclass
class SliceWiringTable:
    """Bias components of every wiring for one bipartition, linear in (alpha, gamma)."""

    bipartition: str
    components: np.ndarray  # (n_unique, 3, 2): [W, PR_AB, PR_BE] biases
    first_index: np.ndarray

    def biases(self, alpha: float, gamma: float) -> np.ndarray:
        w = np.array([1.0 - alpha - gamma, alpha, gamma])
        return np.einsum("k,nkc->nc", w, self.components)


@functools.lru_cache(maxsize=8)
def slice_wiring_table(bipartition: str = "A|BE") -> SliceWiringTable:
    comps = [bias_array(effective_boxes(slice_box(a, g), bipartition)) for a, g in ((0, 0), (1, 0), (0, 1))]
    stacked = np.stack(comps, axis=1)
    uniq, first = dedupe(stacked)
    return SliceWiringTable(bipartition, uniq, first)


def _best(values: np.ndarray, first: np.ndarray) -> int:
    # ties broken by lowest wiring index
    m = values.max()
    cand = np.flatnonzero(values == m)
    return int(cand[np.argmin(first[cand])])


def _capacity_array(t: np.ndarray) -> np.ndarray:
    t = np.abs(t)
    return (phi_array(t) + phi_array(-t)) / (2.0 * LN2)


def original_margins(biases: np.ndarray, eps: float) -> np.ndarray:
    c = 1.0 - 2.0 * eps
    return _capacity_array(c * biases[:, 0]) + _capacity_array(c * biases[:, 1]) - correlation_capacity(c)


def limit_proxies(biases: np.ndarray) -> np.ndarray:
    return (biases ** 2).sum(axis=1) - 1.0


@dataclass(frozen=True)
class WiredResult:
    wiring: Wiring
    bipartition: str
    value: float  # margin (finite eps) or proxy (limit mode)
    report: ICReport | None
    distinct: int


def best_wired_violation(
    box: TripartiteBox,
    criterion: str = "original",
    eps: float | None = 0.0,
    *,
    bipartition: str = "A|BE",
    limit: bool = False,
    rhs_convention: str = "consistent",
    tol: float = VIOLATION_TOL,
) -> WiredResult:
    """Maximise a bipartite criterion's margin over every wiring.

    ``limit=True`` maximises the small-capacity proxy instead of a finite-eps
    margin (original criterion only).  The report is recomputed on the exact
    protocol joint of the argmax wiring.
    """
    eff = effective_boxes(box, bipartition)
    if criterion == "original" or limit:
        if criterion != "original":
            raise ValueError("limit mode exists only for the original criterion")
        uniq, first = dedupe(bias_array(eff))
        vals = limit_proxies(uniq) if limit else original_margins(uniq, eps)
        k = _best(vals, first)
    elif criterion == "generalized":
        uniq, first = dedupe(eff)
        vals = np.array([eval_ic_generalized(BipartiteBox(b, check=False), eps, rhs_convention).margin for b in uniq])
        k = _best(vals, first)
    else:
        raise ValueError(f"{criterion!r} is not a bipartite criterion")
    w = Wiring.from_index(int(first[k]))
    wired = BipartiteBox(eff[first[k]], check=False)
    if limit:
        report = None
        value = eval_ic_bipartite_limit(wired)
    elif criterion == "original":
        report = eval_ic_original(wired, eps, tol=tol)
        value = report.margin
    else:
        report = eval_ic_generalized(wired, eps, rhs_convention, tol=tol)
        value = report.margin
    return WiredResult(w, bipartition, value, report, len(uniq))


def ranked_wirings(box: TripartiteBox, eps: float | None = None, *, bipartition="A|BE", top_k: int = 10):
    """Top ``top_k`` (wiring, value) pairs of the original criterion, one per distinct biases."""
    eff = effective_boxes(box, bipartition)
    uniq, first = dedupe(bias_array(eff))
    vals = limit_proxies(uniq) if eps is None else original_margins(uniq, eps)
    order = np.lexsort((first, -vals))[:top_k]
    return [(Wiring.from_index(int(first[i])), float(vals[i])) for i in order], len(uniq)


def write_margins_csv(box: TripartiteBox, eps: float | None, path, *, bipartition="A|BE") -> None:
    """Per-wiring margin (or limit proxy when ``eps`` is None) for all wirings."""
    biases = bias_array(effective_boxes(box, bipartition))
    vals = limit_proxies(biases) if eps is None else original_margins(biases, eps)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["index", "wiring", "e0", "e1", "proxy" if eps is None else "margin"])
        for i in range(N_WIRINGS):
            wr.writerow([i, Wiring.from_index(i).to_hex(), f"{biases[i, 0]:.12g}", f"{biases[i, 1]:.12g}", f"{vals[i]:.12g}"])


def slice_wired_proxy(alpha: float, gamma: float, bipartitions=("A|BE", "E|AB")) -> tuple[float, str, Wiring]:
    """Largest limit proxy over all wirings and the given bipartitions for a slice point."""
    best = (-math.inf, "", IDENTITY)
    for bp in bipartitions:
        tab = slice_wiring_table(bp)
        vals = limit_proxies(tab.biases(alpha, gamma))
        k = _best(vals, tab.first_index)
        if vals[k] > best[0]:
            best = (float(vals[k]), bp, Wiring.from_index(int(tab.first_index[k])))
    return best
