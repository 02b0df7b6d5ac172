"""Eavesdropping operations: photon-pair splitting and intercept-resend.

The splitting attack taps a channel known (by nondemolition counting) to
carry exactly two photons: a 50:50 beamsplitter deflects each photon
independently toward the eavesdropper, and a second nondemolition count on
the deflected arm heralds success when exactly one photon crossed.  On the
heralded branch the channel keeps one photon and the eavesdropper holds a
copy correlated with it; either failure outcome (zero or two deflected)
leaves both photons together, so recombining restores the pre-attempt state
exactly and the attempt can be repeated.  On the two-pair source component
this pipeline produces, after splitting both channels,

  (1/(2 sqrt 3)) [ |HV>_AB (2|HV>_E - |VH>_E) + |VH>_AB (2|VH>_E - |HV>_E)
                   - |HH>_AB |VV>_E - |VV>_AB |HH>_E ]

with anti-correlated key rounds kept at error rate 1/6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .fock import FockError, ModeLabel, ModeRegistry, StateVector, attack_registry
from .optics import BasisAngle, beamsplitter_50_50, qnd_count, rotate_polarization


class SplitMode(Enum):
    ANALYTIC = "analytic"        # condition on the heralded success branch
    MONTE_CARLO = "monte_carlo"  # simulate the retry loop with an RNG


@dataclass(frozen=True)
class AttackConfig:
    max_attempts: int = 20
    mode: SplitMode = SplitMode.ANALYTIC

    def __post_init__(self):
        if self.max_attempts < 1:
            raise FockError(f"max_attempts must be >= 1, got {self.max_attempts}")


class SplitResult(NamedTuple):
    success: bool
    attempts: int
    state: StateVector
    per_attempt_probability: float


def _split_branches(state: StateVector, party: str, channel: int, eve_party: str):
    """One splitting attempt: beamsplit both polarizations, count the tap arm.

    Returns (success_probability, success_state, input_norm_sq).  Failure
    needs no state: zero or two deflected photons recombine into the original
    channel, restoring the input exactly.
    """
    reg = state.registry
    hi = ModeLabel(party, channel, 0)
    vi = ModeLabel(party, channel, 1)
    eh = ModeLabel(eve_party, 0, 0)
    ev = ModeLabel(eve_party, 0, 1)
    h_idx, v_idx = reg.channel_modes(party, channel)
    for occ, _ in state.terms():
        if occ[h_idx] + occ[v_idx] != 2:
            raise FockError(
                f"split attack requires exactly 2 photons in channel {party}{channel}; "
                f"gate the input with qnd_count first")
    tapped = beamsplitter_50_50(beamsplitter_50_50(state, hi, eh), vi, ev)
    norm_sq = state.norm_sq()
    for branch in qnd_count(tapped, [eh, ev]):
        if branch.count == 1:
            return branch.probability / norm_sq, branch.state * math.sqrt(norm_sq), norm_sq
    raise FockError("splitting attempt has no one-photon tap branch")


def split_channel(state: StateVector, party: str, channel: int, eve_party: str,
                  config: AttackConfig = AttackConfig(),
                  rng: np.random.Generator | None = None) -> SplitResult:
    """Split one photon out of a two-photon channel into eve_party's modes.

    ANALYTIC mode conditions on the heralded success and reports the
    per-attempt success probability.  MONTE_CARLO mode draws the retry loop:
    each failed attempt restores the input state, so up to
    config.max_attempts draws decide between the success branch and giving
    up (state passed through untouched, success=False).
    """
    p_success, success_state, _ = _split_branches(state, party, channel, eve_party)
    if config.mode is SplitMode.ANALYTIC:
        return SplitResult(True, 1, success_state, p_success)
    if rng is None:
        raise FockError("MONTE_CARLO split needs an rng")
    for attempt in range(1, config.max_attempts + 1):
        if rng.random() < p_success:
            return SplitResult(True, attempt, success_state, p_success)
    return SplitResult(False, config.max_attempts, state, p_success)


def attack_four_photon(registry: ModeRegistry | None = None) -> StateVector:
    """Post-attack state of the two-pair component, both channels split.

    Equals split_channel on A then B applied to the four-photon component
    (each stage heralded with per-attempt probability 1/2); written out
    directly here so the pipeline can be cross-checked against it.
    """
    registry = registry or attack_registry()
    reg8 = attack_registry()
    r = 1.0 / (2.0 * math.sqrt(3.0))
    #           AH AV BH BV E1H E1V E2H E2V
    st = StateVector(reg8, {
        (1, 0, 0, 1, 1, 0, 0, 1): 2 * r,   # |HV>_AB |HV>_E
        (1, 0, 0, 1, 0, 1, 1, 0): -r,      # |HV>_AB |VH>_E
        (0, 1, 1, 0, 0, 1, 1, 0): 2 * r,   # |VH>_AB |VH>_E
        (0, 1, 1, 0, 1, 0, 0, 1): -r,      # |VH>_AB |HV>_E
        (1, 0, 1, 0, 0, 1, 0, 1): -r,      # |HH>_AB |VV>_E
        (0, 1, 0, 1, 1, 0, 1, 0): -r,      # |VV>_AB |HH>_E
    })
    return st if registry == reg8 else st.embed(registry)


class InterceptResult(NamedTuple):
    bit: int | None  # eavesdropper's measured bit; None if the channel was empty
    state: StateVector


def intercept_resend(state: StateVector, party: str, channel: int,
                     eve_basis: BasisAngle, rng: np.random.Generator) -> InterceptResult:
    """Measure one (at most single-photon) channel in eve_basis and resend.

    The channel is rotated into the eavesdropper's basis, collapsed onto her
    observed occupation, and rotated back; since she re-injects a fresh
    photon of exactly the polarization she saw, the collapsed state already
    is the resent state.  An empty channel resends nothing (bit None).
    """
    h_idx, v_idx = state.registry.channel_modes(party, channel)
    for occ, _ in state.terms():
        if occ[h_idx] + occ[v_idx] > 1:
            raise FockError(
                f"intercept-resend expects at most one photon in channel {party}{channel}")
    rotated = rotate_polarization(state, party, channel, eve_basis)
    branches = []  # (bit, probability, post)
    for want_bit, pattern in ((None, (0, 0)), (0, (1, 0)), (1, (0, 1))):
        prob, post = rotated.project(lambda occ, p=pattern: (occ[h_idx], occ[v_idx]) == p)
        if prob > 0.0:
            branches.append((want_bit, prob, post))
    total = sum(p for _, p, _ in branches)
    u = rng.random() * total
    acc = 0.0
    bit, _, post = branches[-1]
    for b, p, st in branches:
        acc += p
        if u < acc:
            bit, post = b, st
            break
    if eve_basis.theta != 0.0:
        post = rotate_polarization(post, party, channel, -eve_basis.theta)
    return InterceptResult(bit, post)
