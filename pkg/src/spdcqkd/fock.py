"""Sparse state vectors over a small register of labeled bosonic modes.

States live in a truncated Fock space: a state is a map from occupation
vectors (one photon count per registered mode) to complex amplitudes.
Everything downstream keeps at most a few hundred terms, so the
representation is a plain dict and all operations return new states.

Mode bookkeeping: a ModeLabel is (party, channel, polarization) and a
ModeRegistry fixes the slot order of occupation vectors.  Registries are
append-only so occupation tuples written against an old registry remain
valid prefixes after modes are added.
"""

from __future__ import annotations

import math
from typing import Callable, Iterable, Iterator, NamedTuple

DEFAULT_PRUNE_TOL = 1e-12
DEFAULT_MODE_CAP = 8

# polarization slot indices within a channel
POL_H = 0
POL_V = 1


class FockError(ValueError):
    pass


class UnknownModeError(FockError):
    pass


class ModeCapError(FockError):
    pass


class RegistryMismatchError(FockError):
    pass


class ModeLabel(NamedTuple):
    party: str
    channel: int
    pol: int

    def __str__(self) -> str:
        return f"{self.party}{self.channel}{'HV'[self.pol]}"


class ModeRegistry:
    """Ordered, append-only collection of modes; order fixes occupation slots."""

    __slots__ = ("_labels", "_index")

    def __init__(self, labels: Iterable[ModeLabel] = ()):
        self._labels = tuple(ModeLabel(*lab) for lab in labels)
        self._index = {lab: i for i, lab in enumerate(self._labels)}
        if len(self._index) != len(self._labels):
            raise FockError("duplicate mode label in registry")

    @property
    def labels(self) -> tuple[ModeLabel, ...]:
        return self._labels

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[ModeLabel]:
        return iter(self._labels)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ModeRegistry) and self._labels == other._labels

    def __hash__(self) -> int:
        return hash(self._labels)

    def __repr__(self) -> str:
        return f"ModeRegistry([{', '.join(map(str, self._labels))}])"

    def index(self, label: ModeLabel) -> int:
        try:
            return self._index[ModeLabel(*label)]
        except KeyError:
            raise UnknownModeError(f"mode {ModeLabel(*label)} not in registry") from None

    def __contains__(self, label: ModeLabel) -> bool:
        return ModeLabel(*label) in self._index

    def with_mode(self, label: ModeLabel) -> "ModeRegistry":
        label = ModeLabel(*label)
        if label in self._index:
            raise FockError(f"mode {label} already registered")
        return ModeRegistry(self._labels + (label,))

    def channel_modes(self, party: str, channel: int = 0) -> tuple[int, int]:
        """Slot indices (H, V) of one spatial channel."""
        return (self.index(ModeLabel(party, channel, POL_H)),
                self.index(ModeLabel(party, channel, POL_V)))


def source_registry() -> ModeRegistry:
    """The four source modes A-H, A-V, B-H, B-V (slot order of |ijkl>)."""
    return ModeRegistry([ModeLabel(p, 0, pol) for p in ("A", "B") for pol in (POL_H, POL_V)])


def attack_registry() -> ModeRegistry:
    """Source modes plus one eavesdropper channel per party (E1 taps A, E2 taps B)."""
    return ModeRegistry([ModeLabel(p, 0, pol)
                         for p in ("A", "B", "E1", "E2") for pol in (POL_H, POL_V)])


class StateVector:
    """Immutable sparse ket: occupation tuple -> complex amplitude.

    Not necessarily normalized (projections return sub-normalized pieces and
    the truncated source state deliberately carries a small norm deficit).
    Amplitudes below prune_tol in magnitude are dropped on construction;
    occupations above mode_cap raise rather than silently truncate.
    """

    __slots__ = ("registry", "prune_tol", "mode_cap", "meta", "_amps")

    def __init__(self, registry: ModeRegistry,
                 amplitudes: dict[tuple[int, ...], complex] | None = None, *,
                 prune_tol: float = DEFAULT_PRUNE_TOL,
                 mode_cap: int = DEFAULT_MODE_CAP,
                 meta: dict | None = None):
        self.registry = registry
        self.prune_tol = float(prune_tol)
        self.mode_cap = int(mode_cap)
        self.meta = dict(meta) if meta else {}
        amps: dict[tuple[int, ...], complex] = {}
        n_modes = len(registry)
        for occ, amp in (amplitudes or {}).items():
            if len(occ) != n_modes:
                raise FockError(f"occupation {occ} has {len(occ)} slots, registry has {n_modes}")
            if any(n < 0 or n != int(n) for n in occ):
                raise FockError(f"occupation {occ} has a negative or fractional count")
            for n, lab in zip(occ, registry):
                if n > self.mode_cap:
                    raise ModeCapError(
                        f"mode {lab}: occupation {n} exceeds per-mode cap {self.mode_cap}")
            amp = complex(amp)
            if abs(amp) >= self.prune_tol:
                amps[tuple(int(n) for n in occ)] = amp
        self._amps = amps

    # -- constructors ------------------------------------------------------

    @classmethod
    def vacuum(cls, registry: ModeRegistry, **kw) -> "StateVector":
        return cls(registry, {(0,) * len(registry): 1.0}, **kw)

    @classmethod
    def basis_state(cls, registry: ModeRegistry, occ: tuple[int, ...], **kw) -> "StateVector":
        return cls(registry, {tuple(occ): 1.0}, **kw)

    # -- inspection --------------------------------------------------------

    def terms(self) -> Iterator[tuple[tuple[int, ...], complex]]:
        return iter(self._amps.items())

    def __len__(self) -> int:
        return len(self._amps)

    def amplitude(self, occ: tuple[int, ...]) -> complex:
        return self._amps.get(tuple(occ), 0j)

    def norm_sq(self) -> float:
        return sum((a.real * a.real + a.imag * a.imag) for a in self._amps.values())

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def inner(self, other: "StateVector") -> complex:
        """<self|other>, conjugate-linear in self.  Registries must match."""
        if self.registry != other.registry:
            raise RegistryMismatchError("inner product between different registries")
        small, big = (self, other) if len(self) <= len(other) else (other, self)
        acc = 0j
        for occ, amp in small._amps.items():
            pair = big._amps.get(occ)
            if pair is not None:
                acc += (amp.conjugate() * pair) if small is self else (pair.conjugate() * amp)
        return acc

    def __repr__(self) -> str:
        return f"StateVector({len(self._amps)} terms, |psi|^2={self.norm_sq():.6g})"

    # -- linear structure ---------------------------------------------------

    def _like(self, amps: dict[tuple[int, ...], complex]) -> "StateVector":
        return StateVector(self.registry, amps, prune_tol=self.prune_tol, mode_cap=self.mode_cap)

    def __mul__(self, scalar: complex) -> "StateVector":
        scalar = complex(scalar)
        return self._like({occ: amp * scalar for occ, amp in self._amps.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "StateVector":
        return self * -1.0

    def __add__(self, other: "StateVector") -> "StateVector":
        if self.registry != other.registry:
            raise RegistryMismatchError("sum of states over different registries")
        amps = dict(self._amps)
        for occ, amp in other._amps.items():
            amps[occ] = amps.get(occ, 0j) + amp
        return self._like(amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (other * -1.0)

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise FockError("cannot normalize zero state")
        return self * (1.0 / n)

    # -- ladder operators ----------------------------------------------------

    def create(self, label: ModeLabel) -> "StateVector":
        """Apply a-dagger on one mode: amplitude picks up sqrt(n+1)."""
        i = self.registry.index(label)
        amps: dict[tuple[int, ...], complex] = {}
        for occ, amp in self._amps.items():
            n = occ[i]
            if n + 1 > self.mode_cap:
                raise ModeCapError(
                    f"mode {ModeLabel(*label)}: occupation {n + 1} exceeds per-mode cap {self.mode_cap}")
            new = occ[:i] + (n + 1,) + occ[i + 1:]
            amps[new] = amps.get(new, 0j) + amp * math.sqrt(n + 1)
        return self._like(amps)

    def annihilate(self, label: ModeLabel) -> "StateVector":
        """Apply a on one mode: amplitude picks up sqrt(n); vacuum terms drop."""
        i = self.registry.index(label)
        amps: dict[tuple[int, ...], complex] = {}
        for occ, amp in self._amps.items():
            n = occ[i]
            if n == 0:
                continue
            new = occ[:i] + (n - 1,) + occ[i + 1:]
            amps[new] = amps.get(new, 0j) + amp * math.sqrt(n)
        return self._like(amps)

    # -- measurement / structure ----------------------------------------------

    def project(self, predicate: Callable[[tuple[int, ...]], bool]) -> tuple[float, "StateVector"]:
        """Keep terms whose occupation satisfies predicate.

        Returns (probability, renormalized post-state) where probability is
        the squared norm of the kept component (relative to the squared norm
        of self).  A vanishing component returns (0.0, zero state).
        """
        kept = {occ: amp for occ, amp in self._amps.items() if predicate(occ)}
        prob = sum((a.real * a.real + a.imag * a.imag) for a in kept.values())
        if prob <= 0.0:
            return 0.0, self._like({})
        scale = 1.0 / math.sqrt(prob)
        return prob, self._like({occ: amp * scale for occ, amp in kept.items()})

    def add_mode(self, label: ModeLabel) -> "StateVector":
        """Extend the registry with a new vacuum mode (appended slot)."""
        reg = self.registry.with_mode(label)
        return StateVector(reg, {occ + (0,): amp for occ, amp in self._amps.items()},
                           prune_tol=self.prune_tol, mode_cap=self.mode_cap)

    def embed(self, registry: ModeRegistry) -> "StateVector":
        """Re-express on a larger registry; modes not present here become vacuum."""
        slots = [registry.index(lab) for lab in self.registry]
        width = len(registry)
        amps: dict[tuple[int, ...], complex] = {}
        for occ, amp in self._amps.items():
            new = [0] * width
            for s, n in zip(slots, occ):
                new[s] = n
            amps[tuple(new)] = amp
        return StateVector(registry, amps, prune_tol=self.prune_tol, mode_cap=self.mode_cap)

    def drop_modes(self, indices: Iterable[int]) -> "StateVector":
        """Remove modes that carry one common occupation across every term.

        Used to peel off measured-and-collapsed channels, leaving a pure state
        of the remaining modes.  Raises if the dropped modes are still
        correlated with the rest (the reduced state would be mixed).
        """
        drop = sorted(set(indices))
        fixed = None
        for occ, _ in self._amps.items():
            sig = tuple(occ[i] for i in drop)
            if fixed is None:
                fixed = sig
            elif sig != fixed:
                raise FockError("dropped modes are not in a common product state")
        keep = [i for i in range(len(self.registry)) if i not in drop]
        reg = ModeRegistry([self.registry.labels[i] for i in keep])
        amps = {tuple(occ[i] for i in keep): amp for occ, amp in self._amps.items()}
        return StateVector(reg, amps, prune_tol=self.prune_tol, mode_cap=self.mode_cap)

    # -- debug dump -----------------------------------------------------------

    def dump_lines(self) -> list[str]:
        """One line per term: comma-joined counts, then Re and Im of the amplitude.

        Lines are sorted lexicographically by occupation so dumps are stable
        and diffable.
        """
        out = []
        for occ in sorted(self._amps):
            amp = self._amps[occ]
            out.append(f"{','.join(map(str, occ))} {amp.real:.12g} {amp.imag:.12g}")
        return out

    def dumps(self) -> str:
        return "\n".join(self.dump_lines()) + "\n"
