"""Weak and strong measurement updates and the six-observer sequential pipeline.

Each side of the experiment has two observers: the first performs a weak
measurement with quality factor ``F`` and precision factor ``G``, the second
a strong (projective) measurement.  Intermediate states stay unnormalized so
that the trace of the final state is the probability of the full outcome
record.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .qcore import DensityOperator, ObservableDirection, Site, embed, projector

__all__ = [
    "PointerQuality",
    "ObserverSlot",
    "MeasurementPlan",
    "OutcomeRecord",
    "SettingChoice",
    "weak_update",
    "strong_update",
    "run_sequence",
    "STAGES",
]

# Canonical pipeline order: both observers of a side act back to back,
# Alice's side first.  Permuting side blocks must not change any joint
# probability; that is verified by tests, not exploited here.
STAGES: tuple[tuple[Site, int], ...] = (
    (Site.ALICE, 1),
    (Site.ALICE, 2),
    (Site.BOB, 1),
    (Site.BOB, 2),
    (Site.CHARLIE, 1),
    (Site.CHARLIE, 2),
)


@dataclass(frozen=True)
class PointerQuality:
    """Quality factor ``F`` and precision factor ``G`` of a weak measurement.

    Admissible pointers satisfy ``F**2 + G**2 <= 1``; the optimal pointer
    saturates the bound.
    """

    F: float
    G: float

    def __post_init__(self) -> None:
        f, g = float(self.F), float(self.G)
        if not 0.0 <= f <= 1.0 or not 0.0 <= g <= 1.0:
            raise ValueError(f"F and G must lie in [0, 1], got F={f}, G={g}")
        if f * f + g * g > 1.0 + 1e-12:
            raise ValueError(f"inadmissible pointer: F^2 + G^2 = {f * f + g * g}")
        object.__setattr__(self, "F", f)
        object.__setattr__(self, "G", g)

    @classmethod
    def optimal(cls, g: float) -> "PointerQuality":
        """Optimal pointer for precision ``g``: ``F = sqrt(1 - G**2)``."""
        g = float(g)
        if not 0.0 <= g <= 1.0:
            raise ValueError(f"G must lie in [0, 1], got {g}")
        return cls(float(np.sqrt(max(0.0, 1.0 - g * g))), g)

    @property
    def is_optimal(self) -> bool:
        return abs(self.F * self.F + self.G * self.G - 1.0) <= 1e-12


@dataclass(frozen=True)
class ObserverSlot:
    """Addresses one of the six observers: a side and a stage (1 = weak, 2 = strong)."""

    site: Site
    stage: int

    def __post_init__(self) -> None:
        if self.stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {self.stage}")
        object.__setattr__(self, "site", Site(self.site))


@dataclass(frozen=True)
class MeasurementPlan:
    """The twelve observable directions and three pointer qualities of one run.

    ``directions[site][stage-1]`` is the pair (setting 1, setting 2) of
    Bloch directions for that observer; ``qualities[site]`` applies to the
    stage-1 observer of that side (stage 2 is always strong).
    """

    directions: tuple[
        tuple[
            tuple[ObservableDirection, ObservableDirection],
            tuple[ObservableDirection, ObservableDirection],
        ],
        ...,
    ]
    qualities: tuple[PointerQuality, PointerQuality, PointerQuality]

    def __post_init__(self) -> None:
        dirs = tuple(
            tuple(tuple(pair) for pair in side) for side in self.directions
        )
        if len(dirs) != 3 or any(len(side) != 2 for side in dirs):
            raise ValueError("directions must hold 3 sides x 2 stages x 2 settings")
        for side in dirs:
            for pair in side:
                if len(pair) != 2 or not all(
                    isinstance(d, ObservableDirection) for d in pair
                ):
                    raise ValueError("each stage needs two ObservableDirection settings")
        quals = tuple(self.qualities)
        if len(quals) != 3 or not all(isinstance(q, PointerQuality) for q in quals):
            raise ValueError("qualities must be three PointerQuality values")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "qualities", quals)

    def direction(self, site: Site, stage: int, setting: int) -> ObservableDirection:
        if stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {stage}")
        if setting not in (1, 2):
            raise ValueError(f"setting must be 1 or 2, got {setting}")
        return self.directions[Site(site)][stage - 1][setting - 1]

    def slot_directions(
        self, slot: ObserverSlot
    ) -> tuple[ObservableDirection, ObservableDirection]:
        return self.directions[slot.site][slot.stage - 1]

    def quality(self, site: Site) -> PointerQuality:
        return self.qualities[Site(site)]


def _pack_bits(bits: Sequence[int]) -> int:
    # little-endian: first entry is the least significant bit
    return sum(b << k for k, b in enumerate(bits))


def _unpack_bits(index: int) -> tuple[int, ...]:
    return tuple((index >> k) & 1 for k in range(6))


@dataclass(frozen=True)
class SettingChoice:
    """Setting indices (each 1 or 2) for all six observers, ``(l1, l2, m1, m2, n1, n2)``."""

    l1: int
    l2: int
    m1: int
    m2: int
    n1: int
    n2: int

    def __post_init__(self) -> None:
        for name, value in zip(("l1", "l2", "m1", "m2", "n1", "n2"), self.as_tuple()):
            if value not in (1, 2):
                raise ValueError(f"{name} must be 1 or 2, got {value}")

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.l1, self.l2, self.m1, self.m2, self.n1, self.n2)

    def setting(self, site: Site, stage: int) -> int:
        return self.as_tuple()[2 * Site(site) + stage - 1]

    @property
    def index(self) -> int:
        """Little-endian packed index: ``l1`` is the least significant bit (1 -> 0)."""
        return _pack_bits([v - 1 for v in self.as_tuple()])

    @classmethod
    def from_index(cls, index: int) -> "SettingChoice":
        if not 0 <= index < 64:
            raise ValueError(f"setting index must lie in [0, 64), got {index}")
        return cls(*(b + 1 for b in _unpack_bits(index)))

    @classmethod
    def all(cls) -> Iterator["SettingChoice"]:
        for index in range(64):
            yield cls.from_index(index)


@dataclass(frozen=True)
class OutcomeRecord:
    """Outcomes (each +1 or -1) for all six observers, ``(a1, a2, b1, b2, c1, c2)``."""

    a1: int
    a2: int
    b1: int
    b2: int
    c1: int
    c2: int

    def __post_init__(self) -> None:
        for name, value in zip(("a1", "a2", "b1", "b2", "c1", "c2"), self.as_tuple()):
            if value not in (+1, -1):
                raise ValueError(f"{name} must be +1 or -1, got {value}")

    def as_tuple(self) -> tuple[int, int, int, int, int, int]:
        return (self.a1, self.a2, self.b1, self.b2, self.c1, self.c2)

    def outcome(self, site: Site, stage: int) -> int:
        return self.as_tuple()[2 * Site(site) + stage - 1]

    @property
    def index(self) -> int:
        """Little-endian packed index with ``+1 -> 0`` and ``-1 -> 1``; ``a1`` is the LSB."""
        return _pack_bits([(1 - v) // 2 for v in self.as_tuple()])

    @classmethod
    def from_index(cls, index: int) -> "OutcomeRecord":
        if not 0 <= index < 64:
            raise ValueError(f"outcome index must lie in [0, 64), got {index}")
        return cls(*(1 - 2 * b for b in _unpack_bits(index)))

    @classmethod
    def all(cls) -> Iterator["OutcomeRecord"]:
        for index in range(64):
            yield cls.from_index(index)


def _weak_kernel(
    mat: np.ndarray,
    proj_plus: np.ndarray,
    proj_minus: np.ndarray,
    outcome: int,
    f: float,
    g: float,
) -> np.ndarray:
    # The outcome-aligned projector carries the (1 + a*G - F)/2 weight: the
    # G=1 pointer must degenerate to the projective update for the same
    # outcome, and the canonical closed forms pin the same assignment.
    w_plus = (1.0 + outcome * g - f) / 2.0
    w_minus = (1.0 - outcome * g - f) / 2.0
    return (
        (f / 2.0) * mat
        + w_plus * (proj_plus @ mat @ proj_plus)
        + w_minus * (proj_minus @ mat @ proj_minus)
    )


def weak_update(
    rho: DensityOperator,
    site: Site,
    direction: ObservableDirection,
    outcome: int,
    quality: PointerQuality,
) -> DensityOperator:
    """Apply one weak measurement; the result's trace carries the outcome probability.

    Summed over the two outcomes the channel is trace preserving and maps
    PSD to PSD for every admissible pointer.
    """
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    if not isinstance(quality, PointerQuality):
        raise TypeError("quality must be a PointerQuality")
    proj_plus = embed(projector(direction, +1), site)
    proj_minus = embed(projector(direction, -1), site)
    out = _weak_kernel(rho.matrix, proj_plus, proj_minus, outcome, quality.F, quality.G)
    return DensityOperator(out, normalized=False)


def strong_update(
    rho: DensityOperator,
    site: Site,
    direction: ObservableDirection,
    outcome: int,
) -> DensityOperator:
    """Apply one projective measurement; the result's trace is the Born probability."""
    if outcome not in (+1, -1):
        raise ValueError(f"outcome must be +1 or -1, got {outcome!r}")
    proj = embed(projector(direction, outcome), site)
    return DensityOperator(proj @ rho.matrix @ proj, normalized=False)


def run_sequence(
    rho0: DensityOperator,
    plan: MeasurementPlan,
    choice: SettingChoice,
    record: OutcomeRecord,
) -> float:
    """Probability of one full outcome record for one setting combination.

    Applies the six stage updates in the canonical order and returns the
    trace of the final unnormalized state.
    """
    if not rho0.normalized:
        raise ValueError("run_sequence requires a normalized initial state")
    rho = rho0
    for site, stage in STAGES:
        direction = plan.direction(site, stage, choice.setting(site, stage))
        outcome = record.outcome(site, stage)
        if stage == 1:
            rho = weak_update(rho, site, direction, outcome, plan.quality(site))
        else:
            rho = strong_update(rho, site, direction, outcome)
    return rho.trace
