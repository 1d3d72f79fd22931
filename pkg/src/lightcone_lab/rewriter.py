"""Symbolic expansion of (anti)commutators of generator monomials.

[a_1...a_N, b_1...b_M] and {a_1...a_N, b_1...b_M} expand into N*M terms of
the prototype shape

    sign * a_1...a_{i-1} b_1...b_{j-1} {a_i, b_j} b_{j+1}...b_M a_{i+1}...a_N

where every brace is a scalar anchor fixed by the anticommutation relations.
The commutator form needs one side of even length; the anticommutator form
needs both sides odd.  When only the left side is even the roles swap and the
prototype appears with the b-prefix first.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import HypothesisError, ParameterError
from .fock import FockOperator, ModeBasis, annihilation_operator, creation_operator
from .grids import GridFunction


@dataclass(frozen=True)
class Slot:
    """Reference to one generator factor: side 'a' (left) or 'b' (right), 1-based."""

    side: str
    index: int


@dataclass(frozen=True)
class ExpansionTerm:
    sign: int
    anchor: tuple[int, int]          # scalar {a_i, b_j}
    factors: tuple[Slot, ...]        # remaining operator factors, in order


@dataclass(frozen=True)
class OperatorExpression:
    n_left: int
    n_right: int
    mode: str                        # "commutator" | "anticommutator"
    terms: tuple[ExpansionTerm, ...]


def expand_commutator(n_left: int, n_right: int, mode: str) -> OperatorExpression:
    """Expand the bracket of two generator monomials into anchored terms.

    Signs come from the product rule applied outermost, then the alternating
    identities that peel single generators off the even-length side.
    """
    if n_left < 1 or n_right < 1:
        raise ParameterError("monomials must have at least one factor")
    if mode == "commutator":
        if n_left % 2 == 1 and n_right % 2 == 1:
            raise HypothesisError("commutator expansion needs one side of even length")
    elif mode == "anticommutator":
        if n_left % 2 == 0 or n_right % 2 == 0:
            raise HypothesisError("anticommutator expansion needs both sides odd")
    else:
        raise ParameterError(f"unknown mode {mode!r}")

    terms: list[ExpansionTerm] = []
    if mode == "anticommutator" or n_right % 2 == 0:
        # {A, B} (both odd) or [A, B] (B even): a-prefix comes first
        for i in range(1, n_left + 1):
            for j in range(1, n_right + 1):
                if mode == "anticommutator":
                    sign = (-1) ** (n_left - i + j - 1)
                else:
                    sign = (-1) ** (j - 1)
                factors = (
                    [Slot("a", k) for k in range(1, i)]
                    + [Slot("b", k) for k in range(1, j)]
                    + [Slot("b", k) for k in range(j + 1, n_right + 1)]
                    + [Slot("a", k) for k in range(i + 1, n_left + 1)]
                )
                terms.append(ExpansionTerm(sign, (i, j), tuple(factors)))
    else:
        # [A, B] with A even: expand -[B, A], so the b-prefix comes first
        for i in range(1, n_left + 1):
            for j in range(1, n_right + 1):
                sign = -((-1) ** (i - 1))
                factors = (
                    [Slot("b", k) for k in range(1, j)]
                    + [Slot("a", k) for k in range(1, i)]
                    + [Slot("a", k) for k in range(i + 1, n_left + 1)]
                    + [Slot("b", k) for k in range(j + 1, n_right + 1)]
                )
                terms.append(ExpansionTerm(sign, (i, j), tuple(factors)))
    return OperatorExpression(n_left, n_right, mode, tuple(terms))


GeneratorSpec = tuple[str, GridFunction | np.ndarray]  # ("a" | "adag", function)


def car_anchor(left: GeneratorSpec, right: GeneratorSpec, basis: ModeBasis) -> complex:
    """Scalar value of {x, y} for generators x, y by the anticommutation relations."""
    kind_l, f = left
    kind_r, g = right
    cf = basis.coefficients(f) if isinstance(f, GridFunction) else np.asarray(f, complex)
    cg = basis.coefficients(g) if isinstance(g, GridFunction) else np.asarray(g, complex)
    if kind_l == kind_r:
        return 0.0 + 0.0j
    if kind_l == "a":  # {a(f), a+(g)} = <f, g>
        return complex(np.vdot(cf, cg))
    return complex(np.vdot(cg, cf))  # {a+(f), a(g)} = <g, f>


def generator_operator(spec: GeneratorSpec, basis: ModeBasis) -> FockOperator:
    kind, f = spec
    if kind == "a":
        return annihilation_operator(f, basis)
    if kind == "adag":
        return creation_operator(f, basis)
    raise ParameterError(f"unknown generator kind {kind!r}")


def materialize(
    expr: OperatorExpression,
    left: Sequence[GeneratorSpec],
    right: Sequence[GeneratorSpec],
    basis: ModeBasis,
) -> FockOperator:
    """Evaluate the expansion on concrete generators, term order preserved."""
    if len(left) != expr.n_left or len(right) != expr.n_right:
        raise ParameterError("generator lists do not match the expansion arity")
    ops_left = [generator_operator(s, basis) for s in left]
    ops_right = [generator_operator(s, basis) for s in right]
    dim = 2**basis.size
    total = np.zeros((dim, dim), dtype=complex)
    for term in expr.terms:
        anchor = car_anchor(left[term.anchor[0] - 1], right[term.anchor[1] - 1], basis)
        if anchor == 0:
            continue
        acc = np.eye(dim, dtype=complex)
        for slot in term.factors:
            op = ops_left[slot.index - 1] if slot.side == "a" else ops_right[slot.index - 1]
            acc = acc @ op.dense()
        total += term.sign * anchor * acc
    return FockOperator(basis.size, total)


def direct_bracket(
    left: Sequence[GeneratorSpec],
    right: Sequence[GeneratorSpec],
    basis: ModeBasis,
    mode: str,
) -> FockOperator:
    """Brute-force matrix bracket of the two monomials, for cross-checking."""
    dim = 2**basis.size
    A = np.eye(dim, dtype=complex)
    for s in left:
        A = A @ generator_operator(s, basis).dense()
    B = np.eye(dim, dtype=complex)
    for s in right:
        B = B @ generator_operator(s, basis).dense()
    if mode == "commutator":
        return FockOperator(basis.size, A @ B - B @ A)
    if mode == "anticommutator":
        return FockOperator(basis.size, A @ B + B @ A)
    raise ParameterError(f"unknown mode {mode!r}")
