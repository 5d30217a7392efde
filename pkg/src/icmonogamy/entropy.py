"""Exact joint distributions over named binary variables and Shannon quantities.

All information quantities are in bits.  Mutual information is evaluated as the
Kullback-Leibler divergence between the joint and the product of marginals,
summed term by term in a form where every term is nonnegative.  Near a useless
channel (crossover -> 1/2) both sides of an information-causality inequality
shrink quadratically, and the naive ``H(A) + H(B) - H(AB)`` difference loses
the sign of the margin long before the KL form does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

LN2 = math.log(2.0)
NORM_TOL = 1e-12
CLAMP_TOL = 1e-12

# Taylor coefficients of phi(r) = (1+r) log(1+r) - r = sum_{n>=2} (-1)^n r^n / (n(n-1))
_PHI_COEFFS = [(-1) ** n / (n * (n - 1)) for n in range(2, 16)]


class InconsistentTableError(ArithmeticError):
    """An information quantity came out negative beyond rounding noise."""


def _phi(r: float) -> float:
    # (1+r) ln(1+r) - r, accurate for small |r|
    if r == -1.0:
        return 1.0
    if abs(r) < 0.05:
        acc = 0.0
        rn = r * r
        for c in _PHI_COEFFS:
            acc += c * rn
            rn *= r
        return acc
    return (1.0 + r) * math.log1p(r) - r


def correlation_capacity(t: float) -> float:
    """``1 - h((1+t)/2)`` in bits, i.e. the capacity of a BSC with bias ``t = 1 - 2 eps``.

    Written as ``(phi(t) + phi(-t)) / (2 ln 2)`` so it stays accurate as ``t -> 0``.
    """
    t = abs(float(t))
    if t > 1.0 + 1e-12:
        raise ValueError(f"bias {t} outside [-1, 1]")
    t = min(t, 1.0)
    return (_phi(t) + _phi(-t)) / (2.0 * LN2)


def binary_entropy(p: float) -> float:
    """Shannon binary entropy ``h(p)`` in bits, with ``h(0) = h(1) = 0``."""
    p = float(p)
    if p < -1e-12 or p > 1.0 + 1e-12:
        raise ValueError(f"probability {p} outside [0, 1]")
    p = min(max(p, 0.0), 1.0)
    if p == 0.0 or p == 1.0:
        return 0.0
    return -math.fsum([p * math.log2(p), (1.0 - p) * math.log2(1.0 - p)])


@dataclass(frozen=True)
class ChannelSpec:
    """Binary symmetric channel flipping its input bit with probability ``epsilon``."""

    epsilon: float

    def __post_init__(self):
        if not (0.0 <= self.epsilon < 0.5):
            raise ValueError(f"crossover probability {self.epsilon} outside [0, 1/2)")

    @property
    def bias(self) -> float:
        return 1.0 - 2.0 * self.epsilon

    @property
    def capacity(self) -> float:
        return correlation_capacity(self.bias)


class JointTable:
    """Dense probability table over an ordered tuple of binary variables.

    ``probs`` has shape ``(2,) * n`` with axis ``i`` belonging to ``variables[i]``.
    Instances are treated as immutable; the array is flagged read-only.
    """

    __slots__ = ("variables", "probs", "_axis")

    def __init__(self, variables: Sequence[str], probs, *, check: bool = True):
        variables = tuple(variables)
        arr = np.array(probs, dtype=float)
        if arr.size != 2 ** len(variables):
            raise ValueError(f"{arr.size} entries for {len(variables)} binary variables")
        arr = arr.reshape((2,) * len(variables))
        if len(set(variables)) != len(variables):
            raise ValueError(f"duplicate variable names in {variables}")
        if check:
            if arr.min(initial=0.0) < -NORM_TOL:
                raise ValueError("negative probability in joint table")
            total = math.fsum(arr.ravel())
            if abs(total - 1.0) > NORM_TOL:
                raise ValueError(f"joint table sums to {total!r}")
        arr.setflags(write=False)
        self.variables = variables
        self.probs = arr
        self._axis = {v: i for i, v in enumerate(variables)}

    def __repr__(self):
        return f"JointTable({self.variables})"

    def axis(self, name: str) -> int:
        try:
            return self._axis[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}; table has {self.variables}") from None

    def _names(self, subset: Iterable[str]) -> tuple[str, ...]:
        if isinstance(subset, str):
            subset = (subset,)
        names = tuple(subset)
        for n in names:
            self.axis(n)
        if len(set(names)) != len(names):
            raise ValueError(f"repeated variable in {names}")
        return names

    def marginal(self, subset: Iterable[str]) -> "JointTable":
        """Marginal on ``subset``; variables keep the order given in ``subset``."""
        names = self._names(subset)
        axes = [self.axis(n) for n in names]
        drop = tuple(i for i in range(len(self.variables)) if i not in axes)
        arr = self.probs.sum(axis=drop) if drop else self.probs
        kept = [i for i in range(len(self.variables)) if i in axes]
        order = [kept.index(a) for a in axes]
        if names:
            arr = np.transpose(arr, order)
        return JointTable(names, arr, check=False)

    def prob(self, **assignment: int) -> float:
        """Probability of a partial assignment, e.g. ``j.prob(A=0, B=1)``."""
        m = self.marginal(tuple(assignment))
        return float(m.probs[tuple(assignment.values())]) if assignment else 1.0


def entropy(j: JointTable, subset: Iterable[str]) -> float:
    """Shannon entropy (bits) of the marginal of ``j`` on ``subset``."""
    p = j.marginal(subset).probs.ravel()
    p = p[p > 0.0]
    return -math.fsum((p * np.log2(p)).tolist())


def _check_disjoint(*groups: tuple[str, ...]):
    seen: set[str] = set()
    for g in groups:
        overlap = seen.intersection(g)
        if overlap:
            raise ValueError(f"variable sets overlap on {sorted(overlap)}")
        seen.update(g)


def _clamp(value: float, what: str) -> float:
    if value < 0.0:
        if value < -CLAMP_TOL:
            raise InconsistentTableError(f"{what} = {value!r} < 0")
        return 0.0
    return value


def phi_array(r: np.ndarray) -> np.ndarray:
    """Vectorised ``(1+r) ln(1+r) - r`` for ``r >= -1``."""
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < 0.05
    out = np.empty_like(r)
    rs = r[small]
    acc = np.zeros_like(rs)
    for c in reversed(_PHI_COEFFS):
        acc = acc * rs + c
    out[small] = acc * rs * rs
    rb = r[~small]
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(rb == -1.0, 1.0, (1.0 + rb) * np.log1p(rb) - rb)
    out[~small] = big
    return out


def kl_mutual_information(joint: np.ndarray) -> float:
    """MI (bits) between the row and column index of a 2-D probability array."""
    pl = joint.sum(axis=1)
    pr = joint.sum(axis=0)
    q = np.outer(pl, pr)
    mask = q > 0.0
    qs = q[mask]
    terms = qs * phi_array((joint[mask] - qs) / qs)
    return math.fsum(terms.tolist()) / LN2


def mutual_information(j: JointTable, left: Iterable[str], right: Iterable[str]) -> float:
    """``I(left : right)`` in bits for disjoint, nonempty or empty variable sets."""
    left = j._names(left)
    right = j._names(right)
    _check_disjoint(left, right)
    if not left or not right:
        return 0.0
    arr = j.marginal(left + right).probs.reshape(2 ** len(left), 2 ** len(right))
    return _clamp(kl_mutual_information(arr), "mutual information")


def conditional_mutual_information(
    j: JointTable, left: Iterable[str], right: Iterable[str], given: Iterable[str]
) -> float:
    """``I(left : right | given)`` via the chain rule ``I(L : R,C) - I(L : C)``."""
    left = j._names(left)
    right = j._names(right)
    given = j._names(given)
    _check_disjoint(left, right, given)
    value = mutual_information(j, left, right + given) - mutual_information(j, left, given)
    return _clamp(value, "conditional mutual information")


def apply_bsc(j: JointTable, input_var: str, output_var: str, epsilon: float) -> JointTable:
    """Append ``output_var``, a copy of ``input_var`` flipped with probability ``epsilon``."""
    if output_var in j.variables:
        raise ValueError(f"variable {output_var!r} already present")
    ax = j.axis(input_var)
    eps = ChannelSpec(float(epsilon)).epsilon
    kernel = np.array([[1.0 - eps, eps], [eps, 1.0 - eps]])  # [in, out]
    p = np.moveaxis(j.probs, ax, -1)
    out = p[..., :, None] * kernel
    out = np.moveaxis(out, -2, ax)
    return JointTable(j.variables + (output_var,), out, check=False)


def product_table(variables: Sequence[str], marginals: Sequence[float]) -> JointTable:
    """Independent bits with ``P(v = 1) = marginals[i]``."""
    arr = np.ones(())
    for q in marginals:
        arr = np.multiply.outer(arr, np.array([1.0 - q, q]))
    return JointTable(variables, arr)
