"""No-signaling boxes of the (2,2,2) and (3,2,2) Bell scenarios.

Array conventions: a bipartite box is ``p[x, y, a, b]`` and a tripartite box is
``p[x, y, z, a, b, e]``; parties are A (x, a), B (y, b) and E (z, e).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

NORM_TOL = 1e-12
NS_TOL = 1e-12
BOX_EQ_TOL = 1e-10
BETA_Q = 0.5 * (1.0 + 1.0 / math.sqrt(2.0))


class SignalingError(ValueError):
    pass


def _check_box(p: np.ndarray, nparties: int, tol: float):
    inputs = tuple(range(nparties))
    outputs = tuple(range(nparties, 2 * nparties))
    if p.min() < -NORM_TOL:
        raise ValueError(f"negative entry {p.min()!r} in box")
    norms = p.sum(axis=outputs)
    if np.max(np.abs(norms - 1.0)) > NORM_TOL:
        raise ValueError(f"box not normalized: max deviation {np.max(np.abs(norms - 1.0))!r}")
    for party in range(nparties):
        # the others' joint law must not depend on this party's input
        m = p.sum(axis=outputs[party])
        spread = np.max(np.abs(np.take(m, 0, axis=inputs[party]) - np.take(m, 1, axis=inputs[party])))
        if spread > tol:
            raise SignalingError(f"party {'ABE'[party] if nparties == 3 else 'AB'[party]} signals (deviation {spread!r})")


class _Box:
    nparties = 0

    def __init__(self, probs, *, check: bool = True, ns_tol: float = NS_TOL):
        arr = np.array(probs, dtype=float).reshape((2,) * (2 * self.nparties))
        if check:
            _check_box(arr, self.nparties, ns_tol)
        arr.setflags(write=False)
        self.probs = arr

    def __repr__(self):
        return f"{type(self).__name__}(...)"

    def distance(self, other: "_Box") -> float:
        return float(np.max(np.abs(self.probs - other.probs)))

    def isclose(self, other: "_Box", tol: float = BOX_EQ_TOL) -> bool:
        return type(self) is type(other) and self.distance(other) <= tol

    def __add__(self, other):
        return type(self)(self.probs + other.probs, check=False)

    def __rmul__(self, weight: float):
        return type(self)(weight * self.probs, check=False)

    def validated(self):
        return type(self)(self.probs)


class BipartiteBox(_Box):
    """``p(a, b | x, y)`` stored as ``probs[x, y, a, b]``."""

    nparties = 2


class TripartiteBox(_Box):
    """``p(a, b, e | x, y, z)`` stored as ``probs[x, y, z, a, b, e]``."""

    nparties = 3

    def marginal_ab(self) -> BipartiteBox:
        # average over z; identical for every z by no-signaling
        return BipartiteBox(self.probs.sum(axis=5).mean(axis=2), check=False)

    def marginal_be(self) -> BipartiteBox:
        # returns p(b, e | y, z) with B as the first party
        return BipartiteBox(self.probs.sum(axis=3).mean(axis=0), check=False)

    def marginal_ae(self) -> BipartiteBox:
        return BipartiteBox(self.probs.sum(axis=4).mean(axis=1), check=False)

    def permute_parties(self, order: tuple[int, int, int]) -> "TripartiteBox":
        """Reorder parties; ``order[i]`` is the old index of the new party ``i``."""
        axes = list(order) + [3 + o for o in order]
        return TripartiteBox(np.transpose(self.probs, axes), check=False)


@dataclass(frozen=True)
class SlicePoint:
    alpha: float
    gamma: float

    def __post_init__(self):
        if self.alpha < -1e-12 or self.gamma < -1e-12 or self.alpha + self.gamma > 1.0 + 1e-12:
            raise ValueError(f"({self.alpha}, {self.gamma}) outside the slice triangle")

    @property
    def beta_ab(self) -> float:
        return 0.5 * (1.0 + self.alpha)

    @property
    def beta_be(self) -> float:
        return 0.5 * (1.0 + self.gamma)


# --- CHSH ---------------------------------------------------------------

def _xy_parity():
    return np.array([[x * y for y in (0, 1)] for x in (0, 1)])


def chsh(box: BipartiteBox) -> float:
    """CHSH functional ``(1/4) sum_{x,y} p(a xor b = xy | x, y)``."""
    p = box.probs
    total = 0.0
    for x, y in itertools.product((0, 1), repeat=2):
        t = x * y
        total += p[x, y, t, 0] + p[x, y, t ^ 1, 1]
    return 0.25 * total


def chsh_ab(box: TripartiteBox) -> float:
    return chsh(box.marginal_ab())


def chsh_be(box: TripartiteBox) -> float:
    """CHSH of the BE pair in the orientation ``b xor e = y z``."""
    return chsh(box.marginal_be())


def chsh_biases(box: BipartiteBox) -> tuple[float, float]:
    """Correlators ``E_y = (1/2) sum_x <(-1)^(a+b+xy)>`` for ``y = 0, 1``."""
    p = box.probs
    sign = np.array([[1.0, -1.0], [-1.0, 1.0]])  # (-1)^(a+b)
    out = []
    for y in (0, 1):
        acc = 0.0
        for x in (0, 1):
            acc += (-1) ** (x * y) * float((p[x, y] * sign).sum())
        out.append(0.5 * acc)
    return out[0], out[1]


# --- constructors -------------------------------------------------------

def pr_box() -> BipartiteBox:
    p = np.zeros((2, 2, 2, 2))
    for x, y, a in itertools.product((0, 1), repeat=3):
        p[x, y, a, a ^ (x * y)] = 0.5
    return BipartiteBox(p)


def white_noise_bipartite() -> BipartiteBox:
    return BipartiteBox(np.full((2, 2, 2, 2), 0.25))


def isotropic_box(alpha: float) -> BipartiteBox:
    """``alpha * PR + (1 - alpha) * white noise``; CHSH value ``(1 + alpha) / 2``."""
    if not -1e-12 <= alpha <= 1.0 + 1e-12:
        raise ValueError(f"isotropic weight {alpha} outside [0, 1]")
    return BipartiteBox(alpha * pr_box().probs + (1.0 - alpha) * 0.25)


def deterministic_bipartite(fa, fb) -> BipartiteBox:
    """Local deterministic box ``a = fa(x)``, ``b = fb(y)``; ``fa``/``fb`` are 2-tuples."""
    p = np.zeros((2, 2, 2, 2))
    for x, y in itertools.product((0, 1), repeat=2):
        p[x, y, fa[x], fb[y]] = 1.0
    return BipartiteBox(p)


def slice_box(alpha, gamma: float | None = None) -> TripartiteBox:
    """Two-parameter slice ``alpha PR_AB (x) W_E + gamma PR_BE (x) W_A + rest white``."""
    s = alpha if isinstance(alpha, SlicePoint) else SlicePoint(float(alpha), float(gamma))
    p = np.empty((2,) * 6)
    rest = (1.0 - s.alpha - s.gamma) / 8.0
    for x, y, z, a, b, e in itertools.product((0, 1), repeat=6):
        p[x, y, z, a, b, e] = (
            s.alpha * 0.25 * ((a ^ b) == x * y)
            + s.gamma * 0.25 * ((e ^ b) == z * y)
            + rest
        )
    return TripartiteBox(p)


def white_noise_tripartite() -> TripartiteBox:
    return TripartiteBox(np.full((2,) * 6, 1.0 / 8.0))


def xor_game_box() -> TripartiteBox:
    """Uniform box supported on ``a xor b xor e = xy xor zy``."""
    p = np.zeros((2,) * 6)
    for x, y, z, a, b, e in itertools.product((0, 1), repeat=6):
        if a ^ b ^ e == (x * y) ^ (z * y):
            p[x, y, z, a, b, e] = 0.25
    return TripartiteBox(p)


def pr_ab_times_local_e(pe) -> TripartiteBox:
    """``PR_AB (x) L_E`` with ``pe[z]`` the probability that ``e = 1`` given ``z``."""
    pr = pr_box().probs
    p = np.zeros((2,) * 6)
    for x, y, z, a, b, e in itertools.product((0, 1), repeat=6):
        pez = pe[z] if e else 1.0 - pe[z]
        p[x, y, z, a, b, e] = pr[x, y, a, b] * pez
    return TripartiteBox(p)


def deterministic_tripartite(fa, fb, fe) -> TripartiteBox:
    p = np.zeros((2,) * 6)
    for x, y, z in itertools.product((0, 1), repeat=3):
        p[x, y, z, fa[x], fb[y], fe[z]] = 1.0
    return TripartiteBox(p)


def all_local_deterministic_tripartite() -> list[TripartiteBox]:
    funcs = list(itertools.product((0, 1), repeat=2))
    return [deterministic_tripartite(fa, fb, fe) for fa in funcs for fb in funcs for fe in funcs]


# --- depolarization -----------------------------------------------------

_IDX = list(itertools.product((0, 1), repeat=6))


def _perm(src) -> tuple[int, ...]:
    flat = {k: i for i, k in enumerate(_IDX)}
    return tuple(flat[src(*k)] for k in _IDX)


# Relabelings that keep both a+b = xy and b+e = yz invariant.  Restricted to the
# AB (resp. BE) marginal they generate the full AB (resp. BE) twirl group.
_GENERATORS = (
    _perm(lambda x, y, z, a, b, e: (x, y, z, a ^ 1, b ^ 1, e ^ 1)),
    _perm(lambda x, y, z, a, b, e: (x ^ 1, y, z ^ 1, a, b ^ y, e)),
    _perm(lambda x, y, z, a, b, e: (x, y ^ 1, z, a ^ x, b, e ^ z)),
)


def _group_closure(gens) -> list[tuple[int, ...]]:
    ident = tuple(range(64))
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for g in frontier:
            for h in gens:
                c = tuple(g[i] for i in h)
                if c not in seen:
                    seen.add(c)
                    nxt.append(c)
        frontier = nxt
    return sorted(seen)


TWIRL_GROUP = _group_closure(_GENERATORS)


def flip_output(box: TripartiteBox, party: int) -> TripartiteBox:
    p = np.flip(box.probs, axis=3 + party)
    return TripartiteBox(p, check=False)


def depolarize(box: TripartiteBox) -> TripartiteBox:
    """Uniform mixture of ``box`` over the CHSH-preserving twirl group.

    Boxes with a marginal CHSH below 1/2 are first relabeled (flip ``a`` for the
    AB pair, flip ``e`` for the BE pair) so both values are at least 1/2.
    The output has isotropic AB and BE marginals with weights ``2 beta - 1``.
    """
    if chsh_ab(box) < 0.5:
        box = flip_output(box, 0)
    if chsh_be(box) < 0.5:
        box = flip_output(box, 2)
    flat = box.probs.ravel()
    acc = np.zeros(64)
    for g in TWIRL_GROUP:
        acc += flat[list(g)]
    return TripartiteBox((acc / len(TWIRL_GROUP)).reshape((2,) * 6), check=False)


# --- serialization ------------------------------------------------------

_HEADERS = {
    2: "box bipartite inputs=2,2 outputs=2,2",
    3: "box tripartite inputs=2,2,2 outputs=2,2,2",
}


def dumps_box(box: _Box) -> str:
    """Header line plus one probability per line in lexicographic (inputs, outputs) order."""
    lines = [_HEADERS[box.nparties]]
    lines += [repr(float(v)) for v in box.probs.ravel()]
    return "\n".join(lines) + "\n"


def loads_box(text: str) -> _Box:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    header = lines[0]
    for n, h in _HEADERS.items():
        if header == h:
            cls = BipartiteBox if n == 2 else TripartiteBox
            values = [float(v) for v in lines[1:]]
            if len(values) != 4 ** n:
                raise ValueError(f"expected {4 ** n} probabilities, found {len(values)}")
            return cls(np.array(values))
    raise ValueError(f"unrecognised box header {header!r}")


def save_box(box: _Box, path) -> None:
    Path(path).write_text(dumps_box(box))


def load_box(path) -> _Box:
    return loads_box(Path(path).read_text())
