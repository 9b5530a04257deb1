"""System descriptions, orbit stepping, verdicts, and the shared decision driver."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Protocol, Sequence, Union

from .errors import InternalInvariantError
from .numerics import Angle, CycloNum, embed_polar
from .rounding import (
    ArgandRounding,
    GridPoint,
    PolarRounding,
    RoundingSpec,
    is_admissible,
    point_value,
    round_real,
    round_value,
)


@dataclass(frozen=True)
class JordanBlock:
    size: int
    eigen_modulus: Fraction
    eigen_angle: Angle

    def __post_init__(self) -> None:
        object.__setattr__(self, "eigen_modulus", Fraction(self.eigen_modulus))
        if self.size < 1:
            raise ValueError("block size must be positive")
        if self.eigen_modulus < 0:
            raise ValueError("eigenvalue modulus must be nonnegative")


def _lcm(*values: int) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, v)
    return out


@dataclass(frozen=True)
class JnfSystem:
    """A Jordan-form system: block-diagonal dynamics with per-step rounding.

    Within a block, coordinate j is fed by coordinate j+1 (the last block
    coordinate is autonomous). Initial and target are stored as grid points.
    """

    blocks: tuple[JordanBlock, ...]
    initial: tuple[GridPoint, ...]
    target: tuple[GridPoint, ...]
    rounding: RoundingSpec

    def __post_init__(self) -> None:
        dim = sum(b.size for b in self.blocks)
        if len(self.initial) != dim or len(self.target) != dim:
            raise ValueError("initial/target length must match total dimension")
        for pt in (*self.initial, *self.target):
            if not is_admissible(pt, self.rounding):
                raise ValueError(f"point {pt} is not admissible under {self.rounding}")

    @property
    def dimension(self) -> int:
        return sum(b.size for b in self.blocks)

    def field_order(self) -> int:
        parts = [4]
        if isinstance(self.rounding, PolarRounding):
            parts.append(2 * self.rounding.angle_resolution)
        for b in self.blocks:
            parts.append(2 * b.eigen_angle.denominator)
        return _lcm(*parts)

    def block_slices(self) -> list[tuple[int, int]]:
        out = []
        at = 0
        for b in self.blocks:
            out.append((at, at + b.size))
            at += b.size
        return out

    def eigen_value(self, block: JordanBlock, order: Optional[int] = None) -> CycloNum:
        order = order or self.field_order()
        return embed_polar(block.eigen_modulus, block.eigen_angle, order)


def step_with_intermediates(
    system: JnfSystem,
    state: tuple[GridPoint, ...],
    order: Optional[int] = None,
    eigen_cache: Optional[list[CycloNum]] = None,
) -> tuple[tuple[GridPoint, ...], tuple[CycloNum, ...]]:
    """One rounded step; also returns the exact pre-rounding values."""
    order = order or system.field_order()
    if eigen_cache is None:
        eigen_cache = [system.eigen_value(b, order) for b in system.blocks]
    values = [point_value(p, system.rounding, order) for p in state]
    unrounded: list[CycloNum] = [None] * len(values)  # type: ignore[list-item]
    for (start, end), lam in zip(system.block_slices(), eigen_cache):
        for j in range(start, end):
            w = lam * values[j]
            if j + 1 < end:
                w = w + values[j + 1]
            unrounded[j] = w
    new_state = tuple(round_value(w, system.rounding) for w in unrounded)
    return new_state, tuple(unrounded)


def step(system: JnfSystem, state: tuple[GridPoint, ...]) -> tuple[GridPoint, ...]:
    return step_with_intermediates(system, state)[0]


def simulate(system: JnfSystem, steps: int) -> list[tuple[GridPoint, ...]]:
    """The orbit from the stored initial point, inclusive: steps+1 states."""
    order = system.field_order()
    eigen = [system.eigen_value(b, order) for b in system.blocks]
    out = [system.initial]
    state = system.initial
    for _ in range(steps):
        state, _w = step_with_intermediates(system, state, order, eigen)
        out.append(state)
    return out


@dataclass(frozen=True)
class RationalSystem:
    """x' = round(M x) with a rational matrix and componentwise real rounding."""

    matrix: tuple[tuple[Fraction, ...], ...]
    initial: tuple[Fraction, ...]
    target: tuple[Fraction, ...]
    rounding: ArgandRounding

    def __post_init__(self) -> None:
        n = len(self.matrix)
        if any(len(row) != n for row in self.matrix):
            raise ValueError("matrix must be square")
        if len(self.initial) != n or len(self.target) != n:
            raise ValueError("initial/target length must match dimension")
        g = self.rounding.granularity
        for v in (*self.initial, *self.target):
            if (Fraction(v) / g).denominator != 1:
                raise ValueError(f"{v} is not on the granularity-{g} grid")

    @property
    def dimension(self) -> int:
        return len(self.matrix)


def rational_step(system: RationalSystem, state: tuple[Fraction, ...]) -> tuple[Fraction, ...]:
    kind = system.rounding.kind
    g = system.rounding.granularity
    out = []
    for row in system.matrix:
        acc = Fraction(0)
        for c, v in zip(row, state):
            if c:
                acc += c * v
        out.append(round_real(acc, kind, g))
    return tuple(out)


def rational_simulate(system: RationalSystem, steps: int) -> list[tuple[Fraction, ...]]:
    out = [system.initial]
    state = system.initial
    for _ in range(steps):
        state = rational_step(system, state)
        out.append(state)
    return out


# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class Reached:
    """The target grid point is hit, first at this step (step 0 counts)."""

    step: int


@dataclass(frozen=True)
class CycleDetected:
    """No conclusion other than repetition: step_bound is the repeat step when
    an exact state repeat was seen, else the pigeonhole bound in force."""

    step_bound: int


@dataclass(frozen=True)
class EscapedRadius:
    dimension: int
    radius: Fraction


@dataclass(frozen=True)
class DivergedPastTarget:
    dimension: int


@dataclass(frozen=True)
class StabilizedMismatch:
    dimension: int


Certificate = Union[CycleDetected, EscapedRadius, DivergedPastTarget, StabilizedMismatch]


@dataclass(frozen=True)
class NotReached:
    certificate: Certificate


Verdict = Union[Reached, NotReached]


@dataclass(frozen=True)
class Undecided:
    """The instance falls outside every decidable fragment this tool covers."""

    reason: str


# ---------------------------------------------------------------------------
# Lock-step driver


class BlockAnalyzer(Protocol):
    """Observes one Jordan block along the shared orbit and may certify NO.

    observe_initial sees the starting state; observe sees each transition with
    the exact pre-rounding values. A returned certificate must hold forever
    (the driver has already target-checked the current state).
    """

    def observe_initial(self, state: Sequence[GridPoint]) -> Optional[Certificate]:
        ...

    def observe(
        self,
        step_index: int,
        prev: Sequence[GridPoint],
        unrounded: Sequence[CycloNum],
        new: Sequence[GridPoint],
    ) -> Optional[Certificate]:
        ...


def run_lock_step(
    system: JnfSystem,
    analyzers: Sequence[BlockAnalyzer],
    *,
    step_cap: Optional[int] = None,
    cap_is_state_bound: bool = False,
    visited_budget: int = 2_000_000,
) -> Verdict:
    """Drive the shared orbit, feeding every analyzer, until a conclusion.

    Conclusions, in order of checking per step: target hit, an analyzer
    certificate, an exact state repeat. If step_cap is exceeded, the outcome
    depends on cap_is_state_bound: True means the cap is a proved bound on the
    number of distinct reachable states, so exceeding it without a repeat is a
    sound cycle conclusion; False makes exceeding it an internal error.
    """
    order = system.field_order()
    eigen = [system.eigen_value(b, order) for b in system.blocks]
    state = system.initial
    if state == system.target:
        return Reached(0)
    for analyzer in analyzers:
        cert = analyzer.observe_initial(state)
        if cert is not None:
            return NotReached(cert)
    visited: Optional[dict] = {state: 0}
    i = 0
    while True:
        new_state, unrounded = step_with_intermediates(system, state, order, eigen)
        i += 1
        if new_state == system.target:
            return Reached(i)
        for analyzer in analyzers:
            cert = analyzer.observe(i - 1, state, unrounded, new_state)
            if cert is not None:
                return NotReached(cert)
        if visited is not None:
            if new_state in visited:
                return NotReached(CycleDetected(i))
            if len(visited) >= visited_budget:
                visited = None
            else:
                visited[new_state] = i
        state = new_state
        if step_cap is not None and i >= step_cap:
            if cap_is_state_bound:
                return NotReached(CycleDetected(step_cap))
            raise InternalInvariantError(
                f"no conclusion within the resource bound of {step_cap} steps"
            )


def brute_force_decide(
    system: Union[JnfSystem, RationalSystem],
    ball_bound: Optional[Fraction] = None,
    step_bound: int = 1_000_000,
) -> Verdict:
    """Reference decision by plain enumeration with exact repeat detection.

    If ball_bound is given, leaving the ball is reported as EscapedRadius; the
    caller asserts that bound confines every orbit that can still reach the
    target. Hitting step_bound without a repeat yields CycleDetected at the
    bound; the caller picks step_bound large enough for that to be sound.
    """
    if isinstance(system, RationalSystem):
        state_r = system.initial
        if state_r == system.target:
            return Reached(0)
        seen = {state_r: 0}
        for i in range(1, step_bound + 1):
            state_r = rational_step(system, state_r)
            if state_r == system.target:
                return Reached(i)
            if ball_bound is not None:
                for d, v in enumerate(state_r):
                    if abs(v) > ball_bound:
                        return NotReached(EscapedRadius(d, Fraction(ball_bound)))
            if state_r in seen:
                return NotReached(CycleDetected(i))
            seen[state_r] = i
        return NotReached(CycleDetected(step_bound))
    order = system.field_order()
    eigen = [system.eigen_value(b, order) for b in system.blocks]
    state = system.initial
    if state == system.target:
        return Reached(0)
    seen_j = {state: 0}
    bb_sq = None if ball_bound is None else Fraction(ball_bound) ** 2
    for i in range(1, step_bound + 1):
        state, _w = step_with_intermediates(system, state, order, eigen)
        if state == system.target:
            return Reached(i)
        if bb_sq is not None:
            for d, pt in enumerate(state):
                if pt.modulus_sq() > bb_sq:
                    return NotReached(EscapedRadius(d, Fraction(ball_bound)))
        if state in seen_j:
            return NotReached(CycleDetected(i))
        seen_j[state] = i
    return NotReached(CycleDetected(step_bound))
