"""Kraus-averaged conditional expectation onto a mode subalgebra.

For each traced-out mode n, four unitaries (identity, the two self-adjoint
odd combinations of a_n and a+_n, and the occupation reflection) implement a
single-mode average; composing the averages over N complement modes
reproduces the full 4^N Kraus sum exactly, because conjugations compose and
the sum factorizes mode by mode.  Even operators on the kept modes are fixed,
odd complement monomials are annihilated, and complement-mode monomials
reproduce the quasi-free tracial state.

The tiered plan assigns complement modes to dyadic distance shells around a
region X with per-shell mode budgets, which is what makes the localization
estimate summable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import HypothesisError, ParameterError, PlanError, TruncationError
from .bounds import BoundParams, bracket, manybody_time_envelope
from .fock import (
    FockOperator,
    ModeBasis,
    ModelSpec,
    annihilation_operator,
    creation_operator,
    heisenberg_evolve,
    mode_annihilator,
)

LITERAL_SUM_CAP = 8  # 4^N terms; debug path only


def mode_kraus_unitaries(mode: int, modes: int) -> tuple[FockOperator, ...]:
    """The four single-mode Kraus unitaries (identity first)."""
    a = mode_annihilator(mode, modes)
    ad = a.adjoint()
    ident = FockOperator.identity(modes)
    u1 = ad + a
    u2 = ad - a
    u3 = ident - 2.0 * (ad @ a)
    return (ident, u1, u2, u3)


@dataclass(frozen=True)
class Tier:
    index: int
    mode_indices: tuple[int, ...]
    floor: float
    budget: int


@dataclass
class KrausPlan:
    """Ordered complement modes with dyadic distance tiers and budgets."""

    basis: ModeBasis
    tiers: list[Tier]
    C_X: float
    C_J: float
    n: int
    depth: int | None = None
    complement: list[int] = field(init=False)

    def __post_init__(self) -> None:
        order: list[int] = []
        for tier in sorted(self.tiers, key=lambda t: t.index):
            if len(tier.mode_indices) > tier.budget:
                raise PlanError(
                    f"tier {tier.index} holds {len(tier.mode_indices)} modes, "
                    f"budget is {tier.budget}"
                )
            order.extend(sorted(tier.mode_indices))
        self.complement = order
        if self.depth is None:
            self.depth = len(order)
        if self.depth > len(order):
            raise TruncationError(
                f"depth {self.depth} exceeds the {len(order)} complement modes"
            )

    def manifest(self) -> dict:
        return {
            "tiers": [
                {
                    "i": t.index,
                    "floor": t.floor,
                    "budget": t.budget,
                    "mode_ids": list(t.mode_indices),
                }
                for t in self.tiers
            ],
            "N": self.depth,
            "C_X": self.C_X,
            "C_J": self.C_J,
            "n": self.n,
        }


def tier_budget(C_J: float, i: int, n: int) -> int:
    """Largest admissible mode count of tier i: floor(C_J * 2^(i n / 4))."""
    return int(math.floor(C_J * 2.0 ** (i * n / 4.0)))


def build_dyadic_mode_plan(
    x_mask: np.ndarray,
    basis: ModeBasis,
    C_X: float,
    C_J: float,
    n: int,
    depth: int | None = None,
) -> KrausPlan:
    """Assign complement modes to dyadic distance tiers around the region mask.

    Modes whose numerical support touches the region stay on the kept side.
    A mode tagged with an intended tier must meet that tier's floor C_X 2^i;
    untagged modes go to the deepest tier whose floor they meet.  Modes closer
    than 2 C_X fit no tier and are rejected.
    """
    if not (C_X > 0 and C_J > 0 and n >= 1):
        raise ParameterError("plan constants must be positive")
    x_mask = np.asarray(x_mask, dtype=bool)
    if x_mask.shape != (basis.grid.size,):
        raise ParameterError("region mask must align with the grid")
    if not x_mask.any():
        raise ParameterError("region mask is empty")
    region_points = basis.grid.coordinates()[x_mask]
    tier_members: dict[int, list[int]] = {}
    for idx, mode in enumerate(basis.modes):
        support = mode.support_mask()
        pts = basis.grid.coordinates()[support]
        d = basis.grid.wrap(pts[:, None, :] - region_points[None, :, :])
        dist = float(np.sqrt((d**2).sum(axis=2)).min())
        if dist == 0.0:
            continue  # kept side
        tag_tier = basis.tags[idx].get("tier")
        if tag_tier is not None:
            i = int(tag_tier)
            if dist < C_X * 2**i:
                raise PlanError(
                    f"mode {idx} at distance {dist:.6g} violates the tier-{i} "
                    f"floor {C_X * 2**i:.6g}"
                )
        else:
            if dist < 2 * C_X:
                raise PlanError(
                    f"mode {idx} at distance {dist:.6g} is closer than the "
                    f"first-tier floor {2 * C_X:.6g}"
                )
            i = int(math.floor(math.log2(dist / C_X)))
        tier_members.setdefault(i, []).append(idx)
    tiers = []
    for i in sorted(tier_members):
        budget = tier_budget(C_J, i, n)
        members = tuple(sorted(tier_members[i]))
        if len(members) > budget:
            raise PlanError(
                f"tier {i} exceeds its budget: {len(members)} modes, "
                f"budget {budget}"
            )
        tiers.append(Tier(i, members, C_X * 2**i, budget))
    return KrausPlan(basis, tiers, C_X, C_J, n, depth)


def conditional_expectation(
    A: FockOperator, plan: KrausPlan, literal: bool = False
) -> FockOperator:
    """Average A over the Kraus unitaries of the first `depth` complement modes.

    The default path applies the four-term single-mode average sequentially;
    `literal=True` evaluates the full 4^N sum (debug only, exponential cost).
    """
    modes_used = plan.complement[: plan.depth]
    M = plan.basis.size
    if A.modes != M:
        raise ParameterError("operator does not act on the plan's mode count")
    if literal:
        if len(modes_used) > LITERAL_SUM_CAP:
            raise ParameterError(f"literal sum capped at N <= {LITERAL_SUM_CAP}")
        unitaries = [mode_kraus_unitaries(m, M) for m in modes_used]
        dim = A.dim
        total = np.zeros((dim, dim), dtype=complex)
        counts = len(modes_used)
        for code in range(4**counts):
            u = np.eye(dim, dtype=complex)
            c = code
            for us in unitaries:
                u = u @ us[c % 4].dense()
                c //= 4
            total += u.conj().T @ A.dense() @ u
        return FockOperator(M, total / 4**counts)
    out = A.dense()
    for m in modes_used:
        us = mode_kraus_unitaries(m, M)
        acc = out.copy()
        for u in us[1:]:
            ud = u.dense()
            acc = acc + ud.conj().T @ out @ ud
        out = acc / 4.0
    return FockOperator(M, out)


def tracial_state(monomial: Sequence[tuple[str, int]]) -> complex:
    """Quasi-free tracial value of a normal-ordered generator monomial.

    The monomial is a list of ("adag" | "a", mode index) pairs with all
    creators first.  Matched mirrored pairs give 1/2^n, mismatched index sets
    give 0; the general value is the normalized trace over the involved modes.
    """
    if not monomial:
        return 1.0 + 0.0j
    kinds = [k for k, _ in monomial]
    if any(k not in ("a", "adag") for k in kinds):
        raise ParameterError("monomial entries must be ('a'|'adag', index)")
    switched = False
    for k in kinds:
        if k == "a":
            switched = True
        elif switched:
            raise ParameterError("monomial must be normal-ordered (creators first)")
    involved = sorted({idx for _, idx in monomial})
    remap = {orig: new for new, orig in enumerate(involved)}
    m = len(involved)
    dim = 2**m
    acc = np.eye(dim, dtype=complex)
    for kind, idx in monomial:
        op = mode_annihilator(remap[idx], m).matrix
        if kind == "adag":
            op = op.conj().T
        acc = acc @ op.toarray()
    return complex(np.trace(acc) / dim)


def bimodule_residual(
    A: FockOperator, B: FockOperator, C: FockOperator, plan: KrausPlan
) -> float:
    """|| E(B A C) - B E(A) C ||, requiring even parity of all three operators."""
    for name, op in (("A", A), ("B", B), ("C", C)):
        if op.parity() != "even":
            raise HypothesisError(f"{name} must have even parity")
    lhs = conditional_expectation(B @ A @ C, plan)
    rhs = B @ conditional_expectation(A, plan) @ C
    return (lhs - rhs).norm()


@dataclass(frozen=True)
class LocalizationResult:
    lhs: float
    envelope: float
    ratio: float


def localization_error(
    model: ModelSpec,
    monomial: Sequence[tuple[str, int]],
    x_mask: np.ndarray,
    plan: KrausPlan,
    t: float,
    params: BoundParams,
    C_fit: float = 1.0,
) -> LocalizationResult:
    """Distance between an evolved region observable and its projected version.

    lhs = ||tau_t(A) - E(tau_t(A))|| for A the given even monomial in kept
    modes supported inside the region; the envelope is
    C_fit (sqrt(Xi(t)) + |t| <t>^(1/2+delta)) (1/n) (<t>/C_X)^n.
    """
    if len(monomial) % 2 != 0:
        raise HypothesisError("region observable must be an even monomial")
    x_mask = np.asarray(x_mask, dtype=bool)
    basis = model.basis
    dim_ops: FockOperator | None = None
    for kind, idx in monomial:
        mode = basis.modes[idx]
        if np.any(mode.support_mask() & ~x_mask):
            raise HypothesisError(f"mode {idx} is not supported inside the region")
        op = mode_annihilator(idx, basis.size)
        if kind == "adag":
            op = op.adjoint()
        dim_ops = op if dim_ops is None else dim_ops @ op
    assert dim_ops is not None
    evolved = heisenberg_evolve(dim_ops, model.hamiltonian(), t)
    lhs = (evolved - conditional_expectation(evolved, plan)).norm()
    tb = bracket(t)
    envelope = (
        C_fit
        * (math.sqrt(manybody_time_envelope(t, params, basis.grid.dimension))
           + abs(t) * tb ** (0.5 + params.delta))
        * (1.0 / plan.n)
        * (tb / plan.C_X) ** plan.n
    )
    ratio = lhs / envelope if envelope > 0 else math.inf
    return LocalizationResult(lhs=lhs, envelope=envelope, ratio=ratio)
