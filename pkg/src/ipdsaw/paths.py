"""Polymer configurations, the auxiliary-walk transform, and geometric decompositions.

A configuration of the interacting partially directed self-avoiding walk
(IPDSAW) with ``L`` monomers is a family of ``N`` signed vertical stretches
``l = (l_1, ..., l_N)`` with ``sum(|l_n|) + N == L``; consecutive stretches
are separated by one horizontal monomer.  The energy rewards adjacent
stretches of opposite sign by the minimum of their moduli.

This module also provides the exact brute-force enumeration of the model at
small ``L``, which serves as the ground-truth oracle for everything built on
top of the dynamic-programming engine.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "PolymerPath",
    "AuxWalk",
    "PathGeometry",
    "Pattern",
    "PatternDecomposition",
    "wedge",
    "hamiltonian",
    "hamiltonian_bond_form",
    "to_aux_walk",
    "from_aux_walk",
    "geometry",
    "decompose_patterns",
    "decompose_beads",
    "enumerate_paths",
    "enumerate_partition",
    "ENUMERATION_LIMIT",
    "path_to_line",
    "path_from_line",
]

ENUMERATION_LIMIT = 14


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolymerPath:
    """A configuration ``l in L_{N,L}``: signed stretches plus total length."""

    stretches: tuple[int, ...]
    total_length: int

    def __post_init__(self):
        n = len(self.stretches)
        if n < 1:
            raise ValueError("a path needs at least one stretch")
        ssum = sum(abs(s) for s in self.stretches)
        if ssum + n != self.total_length:
            raise ValueError(
                f"invalid path: sum|l| + N = {ssum + n} != L = {self.total_length}"
            )

    @classmethod
    def from_stretches(cls, stretches: Sequence[int]) -> "PolymerPath":
        st = tuple(int(s) for s in stretches)
        return cls(st, sum(abs(s) for s in st) + len(st))

    @property
    def horizontal_extension(self) -> int:
        return len(self.stretches)


@dataclass(frozen=True)
class AuxWalk:
    """The auxiliary walk ``V`` with two-sided geometric increments.

    ``values`` holds ``V_0 .. V_n`` (``V_0 = 0``); ``geo_area`` is
    ``G_n = sum |V_i|`` and ``alg_area`` is ``A_n = sum V_i`` over
    ``i = 1..n``.
    """

    values: tuple[int, ...]

    def __post_init__(self):
        if not self.values or self.values[0] != 0:
            raise ValueError("auxiliary walk must start at V_0 = 0")

    @property
    def increments(self) -> tuple[int, ...]:
        v = self.values
        return tuple(v[i] - v[i - 1] for i in range(1, len(v)))

    @property
    def geo_area(self) -> int:
        return sum(abs(v) for v in self.values)

    @property
    def alg_area(self) -> int:
        return sum(self.values)


@dataclass(frozen=True)
class PathGeometry:
    """Upper/lower envelopes, middle line and profile of a configuration.

    The middle line is half-integer valued, so it is stored doubled
    (``middle_x2``) to keep the whole geometry exact in integers.
    All four sequences run over ``i = 0 .. N+1``.
    """

    upper: tuple[int, ...]
    lower: tuple[int, ...]
    middle_x2: tuple[int, ...]
    profile: tuple[int, ...]

    @property
    def middle(self) -> tuple[float, ...]:
        return tuple(m / 2.0 for m in self.middle_x2)


@dataclass(frozen=True)
class Pattern:
    """One pattern: ``length`` monomers, ``extension`` stretches, signed ``displacement``."""

    length: int
    extension: int
    displacement: int


@dataclass(frozen=True)
class PatternDecomposition:
    """Split of a path at its zero-length stretches.

    ``patterns`` are the completed patterns (each ends at a zero stretch);
    when the last stretch is nonzero the unfinished suffix is kept in
    ``remainder`` and ``trailing_remainder`` is set.
    """

    patterns: tuple[Pattern, ...]
    trailing_remainder: bool = False
    remainder: Pattern | None = None


# ---------------------------------------------------------------------------
# elementary operations
# ---------------------------------------------------------------------------

def wedge(x: int, y: int) -> int:
    """Interaction kernel: min(|x|, |y|) for opposite signs, else 0.

    Equals ``(|x| + |y| - |x+y|) / 2`` for all integers.
    """
    if x * y < 0:
        return min(abs(x), abs(y))
    return 0


def hamiltonian(path: PolymerPath, beta: float) -> float:
    """Energy ``beta * sum_n wedge(l_n, l_{n+1})`` of a configuration."""
    l = path.stretches
    return beta * sum(wedge(l[i], l[i + 1]) for i in range(len(l) - 1))


def hamiltonian_bond_form(path: PolymerPath, beta: float) -> float:
    """Same energy via ``beta*sum|l_n| - (beta/2)*sum|l_n + l_{n+1}|`` with boundary zeros."""
    l = (0,) + path.stretches + (0,)
    mod = sum(abs(v) for v in l)
    bonds = sum(abs(l[i] + l[i + 1]) for i in range(len(l) - 1))
    return beta * mod - 0.5 * beta * bonds


def to_aux_walk(path: PolymerPath) -> AuxWalk:
    """Alternating-sign transform ``V_i = (-1)^{i-1} l_i``, closed by ``V_{N+1} = 0``."""
    vals = [0]
    for i, s in enumerate(path.stretches, start=1):
        vals.append(s if i % 2 == 1 else -s)
    vals.append(0)
    return AuxWalk(tuple(vals))


def from_aux_walk(walk: AuxWalk, n_stretches: int) -> PolymerPath:
    """Inverse transform; uses ``V_1 .. V_N`` of the walk.

    The walk must have at least ``N+1`` values (``V_0 = 0`` enforced by the
    type); a closing value ``V_{N+1}``, when present, must be zero.
    """
    v = walk.values
    if len(v) < n_stretches + 1:
        raise ValueError("walk too short for requested number of stretches")
    if len(v) > n_stretches + 1 and v[n_stretches + 1] != 0:
        raise ValueError("walk does not close: V_{N+1} != 0")
    stretches = tuple(
        v[i] if i % 2 == 1 else -v[i] for i in range(1, n_stretches + 1)
    )
    return PolymerPath.from_stretches(stretches)


def geometry(path: PolymerPath) -> PathGeometry:
    """Envelopes, middle line (doubled) and profile of a configuration."""
    l = path.stretches
    n = len(l)
    upper = [0]
    lower = [0]
    mid2 = [0]
    prof = [0]
    s_prev = 0
    for i in range(1, n + 1):
        s_cur = s_prev + l[i - 1]
        upper.append(max(s_prev, s_cur))
        lower.append(min(s_prev, s_cur))
        mid2.append(2 * s_prev + l[i - 1])
        prof.append(abs(l[i - 1]))
        s_prev = s_cur
    upper.append(s_prev)
    lower.append(s_prev)
    mid2.append(2 * s_prev)
    prof.append(0)
    return PathGeometry(tuple(upper), tuple(lower), tuple(mid2), tuple(prof))


def decompose_patterns(path: PolymerPath) -> PatternDecomposition:
    """Cut the path at each zero-length stretch.

    Pattern ``k`` covers stretches ``(T_{k-1}, T_k]`` where ``T_k`` is the
    k-th index with ``l_j = 0``; its length is extension plus swept modulus.
    The Hamiltonian is additive over patterns (zero stretches decouple).
    """
    l = path.stretches
    pats: list[Pattern] = []
    start = 0
    for j, s in enumerate(l, start=1):
        if s == 0:
            seg = l[start:j]
            pats.append(
                Pattern(
                    length=len(seg) + sum(abs(v) for v in seg),
                    extension=len(seg),
                    displacement=sum(seg),
                )
            )
            start = j
    if start < len(l):
        seg = l[start:]
        rem = Pattern(
            length=len(seg) + sum(abs(v) for v in seg),
            extension=len(seg),
            displacement=sum(seg),
        )
        return PatternDecomposition(tuple(pats), trailing_remainder=True, remainder=rem)
    return PatternDecomposition(tuple(pats))


def decompose_beads(path: PolymerPath) -> list[tuple[int, int]]:
    """Maximal runs of nonzero stretches with strictly alternating signs.

    Returns half-open index ranges ``(start, stop)`` into ``stretches``.
    A zero stretch terminates the current bead and does not start one; two
    consecutive stretches of the same sign split beads.
    """
    l = path.stretches
    beads: list[tuple[int, int]] = []
    start = None
    for i, s in enumerate(l):
        if s == 0:
            if start is not None:
                beads.append((start, i))
                start = None
            continue
        if start is None:
            start = i
        elif l[i - 1] * s > 0:
            beads.append((start, i))
            start = i
    if start is not None:
        beads.append((start, len(l)))
    return beads


# ---------------------------------------------------------------------------
# brute-force enumeration oracle
# ---------------------------------------------------------------------------

def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def enumerate_paths(total_length: int) -> Iterator[PolymerPath]:
    """All configurations of ``Omega_L``, exhaustively (guarded small ``L``)."""
    if total_length > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to L <= {ENUMERATION_LIMIT}")
    if total_length < 1:
        raise ValueError("L must be >= 1")
    for n in range(1, total_length + 1):
        for comp in _compositions(total_length - n, n):
            nz = [i for i, v in enumerate(comp) if v]
            for signs in itertools.product((1, -1), repeat=len(nz)):
                l = list(comp)
                for i, s in zip(nz, signs):
                    l[i] *= s
                yield PolymerPath(tuple(l), total_length)


def enumerate_partition(total_length: int, beta: float):
    """Exact ``Z_{L,beta}`` with the full weighted configuration list.

    Returns ``(Z, configs)`` where ``configs`` is a list of
    ``(PolymerPath, boltzmann_weight)``; dividing the weights by ``Z`` gives
    the exact polymer law ``P_{L,beta}``.
    """
    configs = []
    z = 0.0
    for p in enumerate_paths(total_length):
        w = math.exp(hamiltonian(p, beta))
        configs.append((p, w))
        z += w
    return z, configs


def enumerate_partition_value(total_length: int, beta: float) -> float:
    """``Z_{L,beta}`` by depth-first enumeration, weights only (fast oracle).

    Walks every configuration once, accumulating the interaction sum
    incrementally; identical coverage to :func:`enumerate_paths` without
    materializing path objects.
    """
    if total_length > ENUMERATION_LIMIT:
        raise ValueError(f"enumeration limited to L <= {ENUMERATION_LIMIT}")
    exp = math.exp

    def rec(budget: int, last: int, energy: int) -> float:
        # budget counts monomers still to place; each stretch costs |k| + 1
        total = 0.0
        for k in range(-(budget - 1), budget):
            e = energy + (min(abs(last), abs(k)) if last * k < 0 else 0)
            rem = budget - abs(k) - 1
            if rem == 0:
                total += exp(beta * e)
            else:
                total += rec(rem, k, e)
        return total

    return rec(total_length, 0, 0)


# ---------------------------------------------------------------------------
# serialization: one path per line, JSON array of stretches
# ---------------------------------------------------------------------------

def path_to_line(path: PolymerPath) -> str:
    return json.dumps(list(path.stretches), separators=(",", ":"))


def path_from_line(line: str) -> PolymerPath:
    stretches = json.loads(line)
    if not isinstance(stretches, list) or not all(
        isinstance(v, int) for v in stretches
    ):
        raise ValueError("path line must be a JSON array of integers")
    return PolymerPath.from_stretches(stretches)
