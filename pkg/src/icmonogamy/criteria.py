"""Information-causality criteria evaluated on exact protocol joints.

Two random-access-code protocols are modelled over binary symmetric channels:

* bipartite: A holds (X1, X2), inputs x = X1 xor X2, sends M = a xor X1;
  B receives M' and answers bit i with G_i = M' xor b using y = i - 1.
* tripartite: senders A and E hold (X1^1, X2^1) and (X1^2, X2^2), input
  x = X1^1 xor X2^1 and z = X1^2 xor X2^2 and send M1 = a xor X1^1 and
  M2 = e xor X1^2 over independent channels; B answers G_j = M1' xor M2' xor b
  with y = j - 1.

Every joint is enumerated exactly.  Classical strategies can be plugged in
through the ``encoder``/``decoder`` hooks.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .boxes import BipartiteBox, TripartiteBox, chsh_biases
from .entropy import (
    ChannelSpec,
    JointTable,
    conditional_mutual_information,
    entropy,
    mutual_information,
)

VIOLATION_TOL = 1e-9

CRITERIA = ("original", "generalized", "tripartite")

BIPARTITE_VARS = ("X1", "X2", "M", "Mp", "G")
TRIPARTITE_VARS = ("X1^1", "X2^1", "X1^2", "X2^2", "M1", "M2", "M1p", "M2p", "G")


@dataclass(frozen=True)
class ICReport:
    criterion: str
    lhs_terms: tuple[tuple[str, float], ...]
    lhs: float
    rhs: float
    channels: tuple[ChannelSpec, ...]
    tolerance: float = VIOLATION_TOL
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def margin(self) -> float:
        return self.lhs - self.rhs

    @property
    def violated(self) -> bool:
        return self.margin > self.tolerance

    @property
    def status(self) -> str:
        m = self.margin
        if m > self.tolerance:
            return "violated"
        if m < -self.tolerance:
            return "satisfied"
        return "inconclusive"

    @property
    def scaled_margin(self) -> float:
        """Margin in units of the bound; resolves the sign when both sides are tiny."""
        return self.margin / self.rhs if self.rhs > 0.0 else self.margin

    def to_record(self) -> str:
        lines = [
            f"criterion = {self.criterion}",
            *(f"term {name} = {value:.12g}" for name, value in self.lhs_terms),
            f"lhs = {self.lhs:.12g}",
            f"rhs = {self.rhs:.12g}",
            f"margin = {self.margin:.12g}",
            f"scaled_margin = {self.scaled_margin:.12g}",
            *(f"eps{k + 1} = {c.epsilon:.12g}" for k, c in enumerate(self.channels)),
            f"violated = {str(self.violated).lower()}",
            f"status = {self.status}",
        ]
        lines += [f"{k} = {v}" for k, v in self.extra.items()]
        return "\n".join(lines) + "\n"

    CSV_HEADER = ("criterion", "alpha", "gamma", "eps1", "eps2", "lhs", "rhs", "margin", "violated")

    def to_csv_row(self, alpha: float = float("nan"), gamma: float = float("nan")) -> list[str]:
        eps = [c.epsilon for c in self.channels] + [float("nan")] * 2
        nums = [alpha, gamma, eps[0], eps[1], self.lhs, self.rhs, self.margin]
        return [self.criterion, *(f"{v:.12g}" for v in nums), str(self.violated).lower()]


def _report(criterion, terms, rhs, channels, tol, **extra) -> ICReport:
    terms = tuple(terms)
    lhs = math.fsum(v for _, v in terms)
    return ICReport(criterion, terms, lhs, rhs, tuple(channels), tol, dict(extra))


def _flip_weights(eps: float) -> np.ndarray:
    e = ChannelSpec(float(eps)).epsilon
    return np.array([1.0 - e, e])


# --- bipartite protocol -------------------------------------------------

Encoder = Callable[[int, int, int], int]
Decoder = Callable[[int, int, int], int]


def _bipartite_layout(encoder: Encoder | None, decoder: Decoder | None, y: int):
    # enumerate (X1, X2, a, b, flip); return box flat index, flip bit, output flat index
    box_idx, flips, out_idx = [], [], []
    for x1, x2, a, b, f in itertools.product((0, 1), repeat=5):
        x = x1 ^ x2
        m = encoder(x1, x2, a) if encoder else a ^ x1
        mp = m ^ f
        g = decoder(mp, b, y) if decoder else mp ^ b
        box_idx.append(((x * 2 + y) * 2 + a) * 2 + b)
        flips.append(f)
        out_idx.append((((x1 * 2 + x2) * 2 + m) * 2 + mp) * 2 + g)
    return np.array(box_idx), np.array(flips), np.array(out_idx)


_BIP_DEFAULT = {y: _bipartite_layout(None, None, y) for y in (0, 1)}


def bipartite_rac_joint(
    box: BipartiteBox,
    eps: float,
    i: int,
    *,
    encoder: Encoder | None = None,
    decoder: Decoder | None = None,
) -> JointTable:
    """Exact joint of ``(X1, X2, M, Mp, G)`` for the receiver asked for bit ``i``.

    ``encoder(X1, X2, a) -> M`` and ``decoder(Mp, b, y) -> G`` override the
    default protocol; the box input on A is always ``X1 xor X2``.
    """
    if i not in (1, 2):
        raise ValueError(f"bit index {i} not in {{1, 2}}")
    y = i - 1
    if encoder is None and decoder is None:
        bidx, flips, oidx = _BIP_DEFAULT[y]
    else:
        bidx, flips, oidx = _bipartite_layout(encoder, decoder, y)
    w = box.probs.ravel()[bidx] * _flip_weights(eps)[flips] * 0.25
    arr = np.bincount(oidx, weights=w, minlength=32)
    return JointTable(BIPARTITE_VARS, arr, check=False)


def eval_ic_original(box: BipartiteBox, eps: float, *, tol: float = VIOLATION_TOL, **strategy) -> ICReport:
    """``I(X1:G1) + I(X2:G2) <= C``."""
    terms = []
    for i in (1, 2):
        j = bipartite_rac_joint(box, eps, i, **strategy)
        terms.append((f"I(X{i}:G{i})", mutual_information(j, [f"X{i}"], ["G"])))
    ch = ChannelSpec(float(eps))
    return _report("original", terms, ch.capacity, [ch], tol)


def eval_ic_generalized(
    box: BipartiteBox,
    eps: float,
    rhs_convention: str = "consistent",
    *,
    tol: float = VIOLATION_TOL,
    **strategy,
) -> ICReport:
    """Prior-aware form: ``sum_i I(X_i : G_i, M') + I(X1 : X2 | G2, M') <= rhs``.

    ``rhs_convention="consistent"`` uses ``C + H(X1) + H(X2) - H(X1, X2)``;
    ``"printed"`` drops ``H(X1)`` from the sum and is violated by classical
    protocols under uniform independent data.
    """
    if rhs_convention not in ("consistent", "printed"):
        raise ValueError(f"unknown rhs convention {rhs_convention!r}")
    j1 = bipartite_rac_joint(box, eps, 1, **strategy)
    j2 = bipartite_rac_joint(box, eps, 2, **strategy)
    terms = [
        ("I(X1:G1,Mp)", mutual_information(j1, ["X1"], ["G", "Mp"])),
        ("I(X2:G2,Mp)", mutual_information(j2, ["X2"], ["G", "Mp"])),
        ("I(X1:X2|G2,Mp)", conditional_mutual_information(j2, ["X1"], ["X2"], ["G", "Mp"])),
    ]
    ch = ChannelSpec(float(eps))
    first = 1 if rhs_convention == "consistent" else 2
    rhs = ch.capacity + sum(entropy(j1, [f"X{i}"]) for i in range(first, 3)) - entropy(j1, ["X1", "X2"])
    return _report("generalized", terms, rhs, [ch], tol, rhs_convention=rhs_convention)


def eval_ic_bipartite_limit(box: BipartiteBox) -> float:
    """Leading-order sign proxy ``sum_i (2 P(G_i = X_i) - 1)^2 - 1`` for the original criterion.

    With uniform data ``I(X_i:G_i)`` equals the capacity of a BSC of bias
    ``(1 - 2 eps) E_i``, so the margin behaves like ``(E_1^2 + E_2^2 - 1) c^2``
    as ``c = 1 - 2 eps -> 0`` and the proxy's sign decides whether any channel
    makes the box violate.
    """
    e0, e1 = chsh_biases(box)
    return e0 * e0 + e1 * e1 - 1.0


def original_margin_closed_form(e0: float, e1: float, eps: float) -> float:
    """Margin of the original criterion from the two guessing biases."""
    from .entropy import correlation_capacity

    c = 1.0 - 2.0 * eps
    return correlation_capacity(c * e0) + correlation_capacity(c * e1) - correlation_capacity(c)


# --- tripartite protocol ------------------------------------------------

TriEncoder = Callable[[int, int, int], int]
TriDecoder = Callable[[int, int, int, int], int]


def _pack(*bits: int) -> int:
    # row-major flat index of a bit tuple
    i = 0
    for b in bits:
        i = 2 * i + b
    return i


def _tripartite_layout(enc1, enc2, dec, y: int):
    box_idx, f1s, f2s, out_idx = [], [], [], []
    for x11, x21, x12, x22, a, b, e, f1, f2 in itertools.product((0, 1), repeat=9):
        x = x11 ^ x21
        z = x12 ^ x22
        m1 = enc1(x11, x21, a) if enc1 else a ^ x11
        m2 = enc2(x12, x22, e) if enc2 else e ^ x12
        m1p, m2p = m1 ^ f1, m2 ^ f2
        g = dec(m1p, m2p, b, y) if dec else m1p ^ m2p ^ b
        box_idx.append(_pack(x, y, z, a, b, e))
        f1s.append(f1)
        f2s.append(f2)
        out_idx.append(_pack(x11, x21, x12, x22, m1, m2, m1p, m2p, g))
    return np.array(box_idx), np.array(f1s), np.array(f2s), np.array(out_idx)


_TRI_DEFAULT = {y: _tripartite_layout(None, None, None, y) for y in (0, 1)}


def tripartite_rac_joint(
    box: TripartiteBox,
    eps1: float,
    eps2: float,
    j: int,
    *,
    encoder1: TriEncoder | None = None,
    encoder2: TriEncoder | None = None,
    decoder: TriDecoder | None = None,
) -> JointTable:
    """Exact joint over ``TRIPARTITE_VARS`` for the receiver asked for bit ``j``.

    ``encoder1(X1^1, X2^1, a)``, ``encoder2(X1^2, X2^2, e)`` and
    ``decoder(M1p, M2p, b, y)`` override the default protocol.
    """
    if j not in (1, 2):
        raise ValueError(f"bit index {j} not in {{1, 2}}")
    y = j - 1
    if encoder1 is None and encoder2 is None and decoder is None:
        bidx, f1, f2, oidx = _TRI_DEFAULT[y]
    else:
        bidx, f1, f2, oidx = _tripartite_layout(encoder1, encoder2, decoder, y)
    w = box.probs.ravel()[bidx] * _flip_weights(eps1)[f1] * _flip_weights(eps2)[f2] * (1.0 / 16.0)
    arr = np.bincount(oidx, weights=w, minlength=512)
    return JointTable(TRIPARTITE_VARS, arr, check=False)


def tripartite_terms(box: TripartiteBox, eps1: float, eps2: float, senders=(1, 2), **strategy):
    """``I(X_j^k : X_j^(3-k), M1', M2', G_j)`` for the requested senders ``k`` and ``j = 1, 2``."""
    terms = []
    for j in (1, 2):
        jt = tripartite_rac_joint(box, eps1, eps2, j, **strategy)
        for k in senders:
            other = 3 - k
            name = f"I(X{j}^{k}:X{j}^{other},M1p,M2p,G{j})"
            terms.append((name, mutual_information(jt, [f"X{j}^{k}"], [f"X{j}^{other}", "M1p", "M2p", "G"])))
    return terms


def eval_ic_tripartite(
    box: TripartiteBox,
    eps1: float,
    eps2: float,
    *,
    sender: int | None = None,
    tol: float = VIOLATION_TOL,
    **strategy,
) -> ICReport:
    """Tripartite criterion.

    ``sender=None`` gives the summed form ``sum_k sum_j I(...) <= C1 + C2``.
    ``sender=k`` gives the per-sender inequality ``sum_j I(X_j^k : ...) <= C_k``,
    which is the sharper statement and implies the summed one.
    """
    c = (ChannelSpec(float(eps1)), ChannelSpec(float(eps2)))
    if sender is None:
        terms = tripartite_terms(box, eps1, eps2, (1, 2), **strategy)
        return _report("tripartite", terms, c[0].capacity + c[1].capacity, c, tol)
    if sender not in (1, 2):
        raise ValueError(f"sender {sender} not in {{1, 2}}")
    terms = tripartite_terms(box, eps1, eps2, (sender,), **strategy)
    return _report(f"tripartite-sender{sender}", terms, c[sender - 1].capacity, c, tol)


def evaluate(criterion: str, box, eps1: float, eps2: float = 0.0, *, rhs_convention="consistent", tol=VIOLATION_TOL):
    """Dispatch by criterion id: original, generalized, tripartite, tripartite-sender1/2."""
    if criterion == "original":
        return eval_ic_original(box, eps1, tol=tol)
    if criterion == "generalized":
        return eval_ic_generalized(box, eps1, rhs_convention, tol=tol)
    if criterion == "tripartite":
        return eval_ic_tripartite(box, eps1, eps2, tol=tol)
    if criterion.startswith("tripartite-sender"):
        return eval_ic_tripartite(box, eps1, eps2, sender=int(criterion[-1]), tol=tol)
    raise ValueError(f"unknown criterion {criterion!r}")


def all_classical_bipartite_strategies() -> list[dict]:
    """Every deterministic box-ignoring strategy: M = f(X1, X2), G = g(M', y)."""
    out = []
    for ft in itertools.product((0, 1), repeat=4):
        for gt in itertools.product((0, 1), repeat=4):
            out.append({
                "encoder": (lambda x1, x2, a, ft=ft: ft[2 * x1 + x2]),
                "decoder": (lambda mp, b, y, gt=gt: gt[2 * mp + y]),
            })
    return out


def classical_tripartite_strategies(limit: Sequence[int] | None = None) -> list[dict]:
    """Deterministic box-ignoring strategies ``M_k = f_k(X1^k, X2^k)``, ``G = g(M1', M2', y)``."""
    out = []
    tables2 = list(itertools.product((0, 1), repeat=4))
    tables3 = list(itertools.product((0, 1), repeat=8))
    for t1 in tables2:
        for t2 in tables2:
            for tg in tables3:
                out.append({
                    "encoder1": (lambda u, v, a, t=t1: t[2 * u + v]),
                    "encoder2": (lambda u, v, e, t=t2: t[2 * u + v]),
                    "decoder": (lambda m1, m2, b, y, t=tg: t[4 * m1 + 2 * m2 + y]),
                })
    if limit is not None:
        out = [out[i] for i in limit]
    return out
