"""Security metrics: error rates, Holevo leakage, and the entropy budget check.

Key-bit convention used throughout: bit 0 is the first polarization slot (H,
or D after a pi/4 rotation).  The source is anti-correlated, so Bob flips his
outcome bit to form his key bit and an *error* is a round where both parties
saw the same polarization.  Double clicks contribute half their weight to
each bit.

The leakage comparison: an eavesdropper splitting pairs learns at most
chi = h((1 - |overlap|)/2) per key bit on attacked rounds (equal priors), so
with attack fraction p her information is p*chi while the error-correction
leakage already spent is h(QBER) = h(p/6); the margin is positive for every
p in (0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .fock import FockError, StateVector
from .optics import DA, HV, BasisAngle, OutcomeKind, joint_threshold_branches


def binary_entropy(x: float) -> float:
    """h(x) = -x log2 x - (1-x) log2 (1-x), with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy argument {x} outside [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def holevo_binary(overlap: complex) -> float:
    """Holevo bound for two equiprobable pure states with the given overlap.

    chi = h((1 - |<e0|e1>|)/2); maximal (1 bit) for orthogonal states, zero
    for identical ones.
    """
    c = abs(overlap)
    if c > 1.0 + 1e-12:
        raise ValueError(f"overlap magnitude {c} exceeds 1")
    return binary_entropy((1.0 - min(c, 1.0)) / 2.0)


_CLICKED = (OutcomeKind.BIT0, OutcomeKind.BIT1, OutcomeKind.DOUBLE)


def _bit_weights(kind: OutcomeKind) -> tuple[tuple[int, float], ...]:
    if kind == OutcomeKind.BIT0:
        return ((0, 1.0),)
    if kind == OutcomeKind.BIT1:
        return ((1, 1.0),)
    return ((0, 0.5), (1, 0.5))  # DOUBLE


@dataclass(frozen=True)
class QberReport:
    qber: float
    sift_probability: float  # P(both channels clicked) under the given bases
    joint: dict[tuple[int, int], float]  # outcome bits (alice, bob), sums to 1


def qber_from_state(state: StateVector, alice_basis: BasisAngle,
                    bob_basis: BasisAngle) -> QberReport:
    """Exact Born-rule error rate of one emitted state under threshold detection."""
    branches = joint_threshold_branches(
        state, [("A", 0, alice_basis), ("B", 0, bob_basis)])
    total = state.norm_sq()
    joint = {(a, b): 0.0 for a in (0, 1) for b in (0, 1)}
    clicked_mass = 0.0
    for kinds, prob, _ in branches:
        ka, kb = kinds
        if ka not in _CLICKED or kb not in _CLICKED:
            continue
        clicked_mass += prob
        for a, wa in _bit_weights(ka):
            for b, wb in _bit_weights(kb):
                joint[(a, b)] += prob * wa * wb
    if clicked_mass <= 0.0:
        return QberReport(0.0, 0.0, joint)
    joint = {k: v / clicked_mass for k, v in joint.items()}
    # anti-correlation convention: equal outcomes are errors
    qber = joint[(0, 0)] + joint[(1, 1)]
    return QberReport(qber, clicked_mass / total, joint)


class EveBranch(NamedTuple):
    probability: float  # conditioned on both parties clicking
    state: StateVector  # pure state of the eavesdropper's modes only


def eve_conditional_states(state: StateVector, alice_basis: BasisAngle,
                           bob_basis: BasisAngle) -> dict[tuple[int, int], EveBranch]:
    """Eavesdropper's pure conditional state for each sifted outcome pair.

    Keys are outcome bits (alice, bob).  The measured A and B channels are
    peeled off the post-measurement state, so the returned states live on the
    remaining (eavesdropper) modes and can be compared by inner product.
    Raises if some outcome pair would leave the eavesdropper in a mixture.
    """
    branches = joint_threshold_branches(
        state, [("A", 0, alice_basis), ("B", 0, bob_basis)])
    a_modes = state.registry.channel_modes("A", 0)
    b_modes = state.registry.channel_modes("B", 0)
    buckets: dict[tuple[int, int], list[tuple[float, StateVector]]] = {}
    clicked_mass = 0.0
    for kinds, prob, post in branches:
        ka, kb = kinds
        if ka not in _CLICKED or kb not in _CLICKED:
            continue
        clicked_mass += prob
        eve = post.drop_modes([*a_modes, *b_modes])
        for a, wa in _bit_weights(ka):
            for b, wb in _bit_weights(kb):
                buckets.setdefault((a, b), []).append((prob * wa * wb, eve))
    out: dict[tuple[int, int], EveBranch] = {}
    for key, pieces in sorted(buckets.items()):
        prob = sum(p for p, _ in pieces)
        first = pieces[0][1]
        for _, other in pieces[1:]:
            if abs(abs(first.inner(other)) - 1.0) > 1e-9:
                raise FockError(
                    f"eavesdropper state for outcome {key} is not pure")
        out[key] = EveBranch(prob / clicked_mass, first)
    return out


@dataclass(frozen=True)
class LeakBound:
    eve_info: float  # p * chi per sifted key bit
    bound: float     # h(p/6), the error-correction leakage at QBER p/6
    margin: float    # bound - eve_info


def leak_vs_bound(p: float) -> LeakBound:
    """Splitting-attack leakage versus the entropy already spent on errors.

    With attack fraction p the error rate is p/6 and the per-bit leak is
    p*h(1/10); the margin bound - leak stays positive on all of (0, 1].
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"attack fraction {p} outside [0, 1]")
    eve_info = p * binary_entropy(0.1)
    bound = binary_entropy(p / 6.0)
    return LeakBound(eve_info, bound, bound - eve_info)


class CorrelationReport(NamedTuple):
    value: float
    degenerate: bool  # a marginal was constant; value set by the copy convention


def eve_wrong_basis_correlation(state: StateVector,
                                eve_basis: BasisAngle = DA,
                                alice_basis: BasisAngle = HV) -> CorrelationReport:
    """Pearson correlation between Alice's bit and the eavesdropper's tap bit.

    Alice threshold-detects her channel in alice_basis while the eavesdropper
    reads her first stored channel (E1) in eve_basis; rounds where either side
    fails to click are discarded.  If a marginal is constant the Pearson
    coefficient is undefined: the report is flagged degenerate and the value
    is +1 for a perfectly copied bit, -1 for a perfectly flipped one, else 0.
    """
    branches = joint_threshold_branches(
        state, [("A", 0, alice_basis), ("E1", 0, eve_basis)])
    joint = {(a, e): 0.0 for a in (0, 1) for e in (0, 1)}
    mass = 0.0
    for kinds, prob, _ in branches:
        ka, ke = kinds
        if ka not in _CLICKED or ke not in _CLICKED:
            continue
        mass += prob
        for a, wa in _bit_weights(ka):
            for e, we in _bit_weights(ke):
                joint[(a, e)] += prob * wa * we
    if mass <= 0.0:
        raise FockError("no rounds where both Alice and the tap clicked")
    joint = {k: v / mass for k, v in joint.items()}
    mean_a = joint[(1, 0)] + joint[(1, 1)]
    mean_e = joint[(0, 1)] + joint[(1, 1)]
    var_a = mean_a * (1.0 - mean_a)
    var_e = mean_e * (1.0 - mean_e)
    if var_a < 1e-24 or var_e < 1e-24:
        agree = joint[(0, 0)] + joint[(1, 1)]
        value = 1.0 if agree > 1.0 - 1e-12 else (-1.0 if agree < 1e-12 else 0.0)
        return CorrelationReport(value, True)
    cov = joint[(1, 1)] - mean_a * mean_e
    return CorrelationReport(cov / math.sqrt(var_a * var_e), False)
