"""Joint probability tables, marginals, correlators and the eight MABK quantities.

The full experiment is summarized by ``P(a1,a2,b1,b2,c1,c2 | settings)`` over
64 setting combinations and 64 outcome records.  Triple marginals average
over the unselected observers' settings with weight ``1/8`` and sum over
their outcomes; correlators and MABK quantities are computed from those
marginals.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .measurement import (
    MeasurementPlan,
    OutcomeRecord,
    PointerQuality,
    SettingChoice,
)
from .qcore import DensityOperator, ObservableDirection, Site, embed, projector

__all__ = [
    "OMEGA_COMBOS",
    "COMBO_TO_OMEGA",
    "JointProbabilityTable",
    "TripleMarginal",
    "MabkResult",
    "joint_table",
    "sequential_joint_table",
    "marginal_triple",
    "correlator",
    "mabk",
    "mabk_all",
    "closed_form",
    "canonical_plan",
    "write_table_csv",
]

# Observer-combination labels: omega -> (Alice stage, Bob stage, Charlie stage).
OMEGA_COMBOS: dict[int, tuple[int, int, int]] = {
    1: (1, 1, 1),
    2: (1, 2, 1),
    3: (1, 1, 2),
    4: (2, 1, 1),
    5: (1, 2, 2),
    6: (2, 1, 2),
    7: (2, 2, 1),
    8: (2, 2, 2),
}
COMBO_TO_OMEGA = {combo: omega for omega, combo in OMEGA_COMBOS.items()}

ROW_SUM_ATOL = 1e-10
ENTRY_FLOOR = -1e-12

_OUTCOME_SIGNS = np.array([+1.0, -1.0])


@dataclass(frozen=True, eq=False)
class JointProbabilityTable:
    """Probabilities indexed by ``[l1,l2,m1,m2,n1,n2,a1,a2,b1,b2,c1,c2]``.

    Every axis has length 2; index 0 means setting 1 / outcome +1.  Each
    setting combination's 64 outcome probabilities sum to 1 within 1e-10 and
    no entry is below -1e-12.
    """

    tensor: np.ndarray

    def __post_init__(self) -> None:
        tensor = np.array(self.tensor, dtype=float)
        if tensor.shape != (2,) * 12:
            raise ValueError(f"expected shape {(2,) * 12}, got {tensor.shape}")
        if tensor.min() < ENTRY_FLOOR:
            raise ValueError(f"negative probability entry {tensor.min():.3e}")
        row_sums = tensor.sum(axis=tuple(range(6, 12)))
        if np.abs(row_sums - 1.0).max() > ROW_SUM_ATOL:
            raise ValueError("outcome probabilities do not sum to 1 per setting")
        tensor.setflags(write=False)
        object.__setattr__(self, "tensor", tensor)

    def flat(self) -> np.ndarray:
        """View as a (64, 64) matrix with little-endian packed indices.

        Row index packs ``(l1,l2,m1,m2,n1,n2)`` with ``l1`` as the least
        significant bit (setting 1 -> 0); column index packs
        ``(a1,a2,b1,b2,c1,c2)`` with ``+1 -> 0`` and ``a1`` as the LSB.
        """
        return self.tensor.transpose(5, 4, 3, 2, 1, 0, 11, 10, 9, 8, 7, 6).reshape(64, 64)

    def entry(self, choice: SettingChoice, record: OutcomeRecord) -> float:
        setting_bits = tuple(v - 1 for v in choice.as_tuple())
        outcome_bits = tuple((1 - v) // 2 for v in record.as_tuple())
        return float(self.tensor[setting_bits + outcome_bits])


def _side_effects(plan: MeasurementPlan, site: Site) -> np.ndarray:
    """2x2 effects of one side's two-step block, indexed ``[l1, l2, o1, o2]``.

    ``E = (F/2) P2 + w+ P1+ P2 P1+ + w- P1- P2 P1-`` is the Heisenberg-picture
    operator whose expectation in the initial state gives the probability of
    the side's outcome pair; the three sides' effects combine by tensor
    product because different-site updates commute.
    """
    q = plan.quality(site)
    p1 = np.array(
        [
            [projector(plan.direction(site, 1, l), s) for s in (+1, -1)]
            for l in (1, 2)
        ]
    )  # [l1, sign, 2, 2]
    p2 = np.array(
        [
            [projector(plan.direction(site, 2, l), o) for o in (+1, -1)]
            for l in (1, 2)
        ]
    )  # [l2, o2, 2, 2]
    sandwich = np.einsum("lsij,mojk,lskn->lsmoin", p1, p2, p1, optimize=True)
    outcome = np.array([+1.0, -1.0])
    sign = np.array([+1.0, -1.0])
    weights = (1.0 + outcome[:, None] * sign[None, :] * q.G - q.F) / 2.0  # [o1, sign]
    effects = np.einsum("ps,lsmoin->lmpoin", weights, sandwich, optimize=True)
    effects += (q.F / 2.0) * p2[None, :, None, :, :, :]
    return effects


def joint_table(rho0: DensityOperator, plan: MeasurementPlan) -> JointProbabilityTable:
    """Exact joint probability table; entries equal ``run_sequence`` values.

    Evaluated by contracting the initial state with the per-side effect
    operators, which is algebraically identical to the sequential pipeline
    but runs all 4096 entries in one tensor contraction.
    """
    if not rho0.normalized:
        raise ValueError("joint_table requires a normalized initial state")
    rho6 = rho0.matrix.reshape((2,) * 6)
    ea = _side_effects(plan, Site.ALICE)
    eb = _side_effects(plan, Site.BOB)
    ec = _side_effects(plan, Site.CHARLIE)
    tensor = np.einsum(
        "abcdef,ghijda,klmneb,opqrfc->ghklopijmnqr", rho6, ea, eb, ec, optimize=True
    )
    imag_max = float(np.abs(tensor.imag).max())
    if imag_max > 1e-10:
        raise ArithmeticError(f"probabilities have imaginary part {imag_max:.3e}")
    return JointProbabilityTable(tensor.real)


def sequential_joint_table(
    rho0: DensityOperator,
    plan: MeasurementPlan,
    side_order: Sequence[Site] = (Site.ALICE, Site.BOB, Site.CHARLIE),
) -> JointProbabilityTable:
    """Reference table builder applying the six stage updates literally.

    ``side_order`` controls which side's two-step block runs first; any
    permutation must produce the same table.
    """
    if not rho0.normalized:
        raise ValueError("sequential_joint_table requires a normalized initial state")
    order = tuple(Site(s) for s in side_order)
    if sorted(order) != [Site.ALICE, Site.BOB, Site.CHARLIE]:
        raise ValueError(f"side_order must be a permutation of the three sites, got {side_order}")

    stage_sequence = [(site, stage) for site in order for stage in (1, 2)]
    # Outcome axis of stage processed at step t ends up at position 5 - t
    # (np.stack pushes the newest branch axis to the front).
    axis_of_stage = {
        stage_key: 5 - t for t, stage_key in enumerate(stage_sequence)
    }
    canonical_stages = [(site, stage) for site in Site for stage in (1, 2)]
    perm = tuple(axis_of_stage[key] for key in canonical_stages)

    tensor = np.empty((2,) * 12)
    for choice in SettingChoice.all():
        states = rho0.matrix[None, :, :]
        for site, stage in stage_sequence:
            setting = choice.setting(site, stage)
            direction = plan.direction(site, stage, setting)
            if stage == 1:
                q = plan.quality(site)
                pp = embed(projector(direction, +1), site)
                pm = embed(projector(direction, -1), site)
                branches = []
                for outcome in (+1, -1):
                    w_plus = (1.0 + outcome * q.G - q.F) / 2.0
                    w_minus = (1.0 - outcome * q.G - q.F) / 2.0
                    branches.append(
                        (q.F / 2.0) * states
                        + w_plus * (pp @ states @ pp)
                        + w_minus * (pm @ states @ pm)
                    )
            else:
                branches = []
                for outcome in (+1, -1):
                    proj = embed(projector(direction, outcome), site)
                    branches.append(proj @ states @ proj)
            states = np.stack(branches, axis=0)
        traces = np.einsum("...ii->...", states).real
        setting_bits = tuple(v - 1 for v in choice.as_tuple())
        tensor[setting_bits] = traces.transpose(perm)
    return JointProbabilityTable(tensor)


@dataclass(frozen=True, eq=False)
class TripleMarginal:
    """Conditional distribution of one observer triple, ``[l, m, n, a, b, c]``.

    ``stages`` records which stage was selected on each side; each of the
    eight setting combinations' outcome distributions sums to 1.
    """

    stages: tuple[int, int, int]
    table: np.ndarray

    def __post_init__(self) -> None:
        stages = tuple(int(s) for s in self.stages)
        if len(stages) != 3 or any(s not in (1, 2) for s in stages):
            raise ValueError(f"stages must be three indices in {{1, 2}}, got {self.stages}")
        table = np.array(self.table, dtype=float)
        if table.shape != (2,) * 6:
            raise ValueError(f"expected shape {(2,) * 6}, got {table.shape}")
        sums = table.sum(axis=(3, 4, 5))
        if np.abs(sums - 1.0).max() > ROW_SUM_ATOL:
            raise ValueError("marginal distributions do not sum to 1 per setting")
        table.setflags(write=False)
        object.__setattr__(self, "stages", stages)
        object.__setattr__(self, "table", table)


def marginal_triple(table: JointProbabilityTable, i: int, j: int, k: int) -> TripleMarginal:
    """Marginal of Alice stage ``i``, Bob stage ``j``, Charlie stage ``k``.

    Sums over the other observers' outcomes and averages their setting
    choices with weight ``1/8``.
    """
    for name, stage in zip("ijk", (i, j, k)):
        if stage not in (1, 2):
            raise ValueError(f"{name} must be 1 or 2, got {stage}")
    selected_out = (5 + i, 7 + j, 9 + k)
    other_out = tuple(sorted(set(range(6, 12)) - set(selected_out)))
    selected_set = (i - 1, 1 + j, 3 + k)
    other_set = tuple(sorted(set(range(6)) - set(selected_set)))
    marg = table.tensor.sum(axis=other_out)
    marg = marg.sum(axis=other_set) / 8.0
    return TripleMarginal((i, j, k), marg)


def correlator(marg: TripleMarginal, l: int, m: int, n: int) -> float:
    """Expectation of the product of the three outcomes at settings ``(l, m, n)``."""
    for name, setting in zip("lmn", (l, m, n)):
        if setting not in (1, 2):
            raise ValueError(f"{name} must be 1 or 2, got {setting}")
    block = marg.table[l - 1, m - 1, n - 1]
    return float(
        np.einsum("abc,a,b,c->", block, _OUTCOME_SIGNS, _OUTCOME_SIGNS, _OUTCOME_SIGNS)
    )


@dataclass(frozen=True)
class MabkResult:
    """One MABK quantity: its label, observer combination, and value."""

    omega: int
    combo: tuple[int, int, int]
    value: float

    def __post_init__(self) -> None:
        if self.omega not in OMEGA_COMBOS:
            raise ValueError(f"omega must lie in 1..8, got {self.omega}")
        if OMEGA_COMBOS[self.omega] != tuple(self.combo):
            raise ValueError(f"combo {self.combo} does not match omega {self.omega}")
        if not 0.0 <= self.value <= 4.0 + 1e-10:
            raise ValueError(f"MABK value {self.value} outside [0, 4]")


def mabk(marg: TripleMarginal) -> MabkResult:
    """MABK quantity ``|-E(1,1,1) + E(2,1,2) + E(2,2,1) + E(1,2,2)|`` of a triple."""
    value = abs(
        -correlator(marg, 1, 1, 1)
        + correlator(marg, 2, 1, 2)
        + correlator(marg, 2, 2, 1)
        + correlator(marg, 1, 2, 2)
    )
    combo = tuple(marg.stages)
    return MabkResult(COMBO_TO_OMEGA[combo], combo, value)


def mabk_all(table: JointProbabilityTable) -> tuple[float, ...]:
    """All eight MABK values ``(B1, ..., B8)`` from one joint table."""
    return tuple(
        mabk(marginal_triple(table, *OMEGA_COMBOS[omega])).value
        for omega in range(1, 9)
    )


def closed_form(
    omega: int,
    f1: float,
    f2: float,
    f3: float,
    g1: float,
    g2: float,
    g3: float,
) -> float:
    """Closed-form MABK value for the canonical settings.

    Only valid for the plan built by :func:`canonical_plan`; the joint-table
    pipeline is the ground truth for any other settings.
    """
    if omega == 1:
        return 4.0 * g1 * g2 * g3
    if omega == 2:
        return 2.0 * (1.0 + f2) * g1 * g3
    if omega == 3:
        return 2.0 * (1.0 + f3) * g1 * g2
    if omega == 4:
        return 2.0 * (1.0 + f1) * g2 * g3
    if omega == 5:
        return (1.0 + f2) * (1.0 + f3) * g1
    if omega == 6:
        return (1.0 + f1) * (1.0 + f3) * g2
    if omega == 7:
        return (1.0 + f1) * (1.0 + f2) * g3
    if omega == 8:
        return 0.5 * (1.0 + f1) * (1.0 + f2) * (1.0 + f3)
    raise ValueError(f"omega must lie in 1..8, got {omega}")


def canonical_plan(g1: float, g2: float, g3: float) -> MeasurementPlan:
    """The X-Y-plane settings under which the closed forms hold.

    Every observer measures in the equatorial plane; stage-1 azimuths are
    ``(0, pi/2)`` and stage-2 azimuths ``(pi, -pi/2)`` on all three sides.
    Pointers are optimal (``F = sqrt(1 - G**2)``).
    """
    half = np.pi / 2.0
    stage1 = (ObservableDirection(half, 0.0), ObservableDirection(half, half))
    stage2 = (ObservableDirection(half, np.pi), ObservableDirection(half, -half))
    side = (stage1, stage2)
    qualities = tuple(PointerQuality.optimal(g) for g in (g1, g2, g3))
    return MeasurementPlan((side, side, side), qualities)


def write_table_csv(table: JointProbabilityTable, path: str) -> None:
    """Write the flat table as CSV with columns setting_index, outcome_index, probability."""
    flat = table.flat()
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["setting_index", "outcome_index", "probability"])
        for s in range(64):
            for o in range(64):
                writer.writerow([s, o, f"{flat[s, o]:.12g}"])
