"""Linear optics and threshold detection on sparse polarization-mode states.

Conventions fixed here and relied on everywhere else:

* Polarization rotation by theta re-expresses a channel in the rotated basis
  with determinant +1:  h  ->  cos(t)*m0' - sin(t)*m1',
                         v  ->  sin(t)*m0' + cos(t)*m1'
  (substitution on creation operators; the channel's two slots afterwards
  mean the rotated modes).  At theta = pi/4 slot 0 is the diagonal mode and
  two H/V photons interfere Hong-Ou-Mandel style:
  |11> -> (|20>' - |02>')/sqrt(2).
* The 50:50 beamsplitter is the real symmetric substitution
  a_from -> (a_from + a_to)/sqrt(2) with no relative phase; the deflected
  output mode must start in vacuum.
* Threshold detectors per channel: two detectors (one per polarization slot),
  outcome classes NoClick / Bit0 / Bit1 / DoubleClick on the (any photons in
  slot 0, any in slot 1) pattern.  Double clicks get a uniformly random
  assigned bit from the caller's RNG stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, NamedTuple

import numpy as np

from .fock import FockError, ModeLabel, StateVector


@dataclass(frozen=True)
class BasisAngle:
    """Measurement-basis rotation angle, radians in [0, pi)."""

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta < math.pi:
            raise FockError(f"basis angle {self.theta} outside [0, pi)")


HV = BasisAngle(0.0)
DA = BasisAngle(math.pi / 4)


class OutcomeKind(IntEnum):
    NO_CLICK = 0
    BIT0 = 1
    BIT1 = 2
    DOUBLE = 3


@dataclass(frozen=True)
class DetectionOutcome:
    kind: OutcomeKind
    bit: int | None  # 0/1; assigned at random for DOUBLE, None for NO_CLICK


class CountBranch(NamedTuple):
    count: int
    probability: float
    state: StateVector


def beamsplitter_50_50(state: StateVector, from_mode: ModeLabel,
                       to_mode: ModeLabel) -> StateVector:
    """Send from_mode through a 50:50 splitter whose other output is to_mode.

    n photons fan out binomially:
    |n, 0> -> 2^(-n/2) * sum_k sqrt(C(n, k)) |n-k, k>.
    to_mode must be unoccupied in every term of the input.
    """
    fi = state.registry.index(from_mode)
    ti = state.registry.index(to_mode)
    if fi == ti:
        raise FockError(f"beamsplitter needs two distinct modes, got {ModeLabel(*from_mode)} twice")
    amps: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.terms():
        if occ[ti] != 0:
            raise FockError(f"beamsplitter output mode {ModeLabel(*to_mode)} is occupied")
        n = occ[fi]
        scale = amp * 2.0 ** (-0.5 * n)
        for k in range(n + 1):
            new = list(occ)
            new[fi] = n - k
            new[ti] = k
            key = tuple(new)
            amps[key] = amps.get(key, 0j) + scale * math.sqrt(math.comb(n, k))
    return StateVector(state.registry, amps, prune_tol=state.prune_tol, mode_cap=state.mode_cap)


def rotate_polarization(state: StateVector, party: str, channel: int,
                        theta: float | BasisAngle) -> StateVector:
    """Re-express one channel's polarization pair in the basis rotated by theta."""
    if isinstance(theta, BasisAngle):
        theta = theta.theta
    hi, vi = state.registry.channel_modes(party, channel)
    c = math.cos(theta)
    s = math.sin(theta)
    amps: dict[tuple[int, ...], complex] = {}
    for occ, amp in state.terms():
        nh, nv = occ[hi], occ[vi]
        tot = nh + nv
        if tot == 0:
            amps[occ] = amps.get(occ, 0j) + amp
            continue
        base = amp / math.sqrt(math.factorial(nh) * math.factorial(nv))
        # (c*x - s*y)^nh (s*x + c*y)^nv, collecting x^m y^(tot-m)
        for i in range(nh + 1):
            wh = math.comb(nh, i) * c ** i * (-s) ** (nh - i)
            for j in range(nv + 1):
                w = wh * math.comb(nv, j) * s ** j * c ** (nv - j)
                if w == 0.0:
                    continue
                m = i + j
                new = list(occ)
                new[hi] = m
                new[vi] = tot - m
                key = tuple(new)
                weight = w * math.sqrt(math.factorial(m) * math.factorial(tot - m))
                amps[key] = amps.get(key, 0j) + base * weight
    return StateVector(state.registry, amps, prune_tol=state.prune_tol, mode_cap=state.mode_cap)


def qnd_count(state: StateVector, modes: Iterable[ModeLabel]) -> list[CountBranch]:
    """Nondemolition total-photon-number measurement over a set of modes.

    Returns every possible count with its Born probability (probabilities sum
    to the squared norm of the input) and the renormalized post-measurement
    state, sorted by count.
    """
    idx = [state.registry.index(m) for m in modes]
    if not idx:
        raise FockError("qnd_count needs at least one mode")
    buckets: dict[int, dict[tuple[int, ...], complex]] = {}
    for occ, amp in state.terms():
        n = sum(occ[i] for i in idx)
        buckets.setdefault(n, {})[occ] = amp
    out = []
    for n in sorted(buckets):
        prob = sum((a.real * a.real + a.imag * a.imag) for a in buckets[n].values())
        scale = 1.0 / math.sqrt(prob)
        post = StateVector(state.registry, {o: a * scale for o, a in buckets[n].items()},
                           prune_tol=state.prune_tol, mode_cap=state.mode_cap)
        out.append(CountBranch(n, prob, post))
    return out


def _click_kind(n0: int, n1: int) -> OutcomeKind:
    if n0 and n1:
        return OutcomeKind.DOUBLE
    if n0:
        return OutcomeKind.BIT0
    if n1:
        return OutcomeKind.BIT1
    return OutcomeKind.NO_CLICK


class ClickBranch(NamedTuple):
    kinds: tuple[OutcomeKind, ...]
    probability: float
    state: StateVector  # rotated frame, renormalized


def joint_threshold_branches(state: StateVector,
                             assignments: list[tuple[str, int, BasisAngle]]
                             ) -> list[ClickBranch]:
    """Joint threshold-detection branch enumeration over several channels.

    assignments lists (party, channel, basis) per measured channel.  The state
    is rotated channel by channel, then terms are partitioned by the tuple of
    click patterns.  Probabilities sum to the squared norm of the input; post
    states stay expressed in the rotated frame with the measured channels'
    photons left in place (they purify the conditional state of the rest).
    """
    rotated = state
    for party, channel, basis in assignments:
        if basis.theta != 0.0:
            rotated = rotate_polarization(rotated, party, channel, basis)
    chans = [rotated.registry.channel_modes(party, channel)
             for party, channel, _ in assignments]
    buckets: dict[tuple[OutcomeKind, ...], dict[tuple[int, ...], complex]] = {}
    for occ, amp in rotated.terms():
        kinds = tuple(_click_kind(occ[h], occ[v]) for h, v in chans)
        buckets.setdefault(kinds, {})[occ] = amp
    out = []
    for kinds in sorted(buckets):
        prob = sum((a.real * a.real + a.imag * a.imag) for a in buckets[kinds].values())
        scale = 1.0 / math.sqrt(prob)
        post = StateVector(rotated.registry, {o: a * scale for o, a in buckets[kinds].items()},
                           prune_tol=state.prune_tol, mode_cap=state.mode_cap)
        out.append(ClickBranch(kinds, prob, post))
    return out


def threshold_detect(state: StateVector, party: str, channel: int,
                     basis: BasisAngle, rng: np.random.Generator
                     ) -> tuple[DetectionOutcome, StateVector]:
    """Threshold-detect one channel in the given basis.

    Samples the click class with Born probabilities (one uniform draw), then,
    only for a double click, draws the assigned bit (second uniform draw).
    The returned post state is renormalized, re-expressed in the lab frame,
    and keeps the absorbed photons in the measured channel's slots.
    """
    branches = joint_threshold_branches(state, [(party, channel, basis)])
    total = sum(b.probability for b in branches)
    if total <= 0.0:
        raise FockError("cannot detect on a zero state")
    u = rng.random() * total
    acc = 0.0
    picked = branches[-1]
    for b in branches:
        acc += b.probability
        if u < acc:
            picked = b
            break
    kind = picked.kinds[0]
    if kind == OutcomeKind.DOUBLE:
        bit = 0 if rng.random() < 0.5 else 1
    elif kind == OutcomeKind.NO_CLICK:
        bit = None
    else:
        bit = 0 if kind == OutcomeKind.BIT0 else 1
    post = picked.state
    if basis.theta != 0.0:
        post = rotate_polarization(post, party, channel, -basis.theta)
    return DetectionOutcome(kind, bit), post
