"""Deciders for blocks whose eigenvalue modulus differs from one."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import sympy

from .errors import (
    InternalInvariantError,
    ModulusOneSpectrumError,
    NonRationalSpectrumError,
)
from .numerics import ceil_sqrt
from .rounding import (
    ArgandRounding,
    GridPoint,
    RoundingSpec,
    kball_count,
    modulus_effect_bound,
    round_real,
)
from .system import (
    Certificate,
    CycleDetected,
    EscapedRadius,
    JnfSystem,
    JordanBlock,
    NotReached,
    RationalSystem,
    Reached,
    Verdict,
    run_lock_step,
)

RationalMatrix = tuple[tuple[Fraction, ...], ...]


def _exact_sqrt(q: Fraction) -> Optional[Fraction]:
    a = math.isqrt(q.numerator)
    b = math.isqrt(q.denominator)
    if a * a == q.numerator and b * b == q.denominator:
        return Fraction(a, b)
    return None


def modulus_upper(value: Union[GridPoint, Fraction, int], granularity: Fraction = Fraction(1)) -> Fraction:
    """A rational upper bound on |value|: exact when the modulus is rational,
    else the ceiling on the granularity grid (a sound enlargement)."""
    if isinstance(value, (int, Fraction)):
        return abs(Fraction(value))
    q = value.modulus_sq()
    root = _exact_sqrt(q)
    if root is not None:
        return root
    g = Fraction(granularity)
    return Fraction(ceil_sqrt(q / (g * g))) * g


@dataclass(frozen=True)
class RadiusTable:
    """Per-dimension escape radii for one block; index 0 is the fed-most
    coordinate, the last index the autonomous one."""

    eigen_modulus: Fraction
    delta: Fraction
    ell: Fraction
    radii: tuple[Fraction, ...]

    @property
    def size(self) -> int:
        return len(self.radii)

    def step_bound(self, spec: RoundingSpec) -> int:
        """States available to this block: ball-count product, floored by the
        bounding-hypercube count (2*Cmax/g)^size."""
        product = 1
        for c in self.radii:
            product *= kball_count(c, spec)
        cmax = max(self.radii)
        cube = (2 * cmax / spec.granularity) ** len(self.radii)
        return max(product, math.ceil(cube))


def radii(
    block: JordanBlock,
    delta: Fraction,
    target_slice: Sequence[Union[GridPoint, Fraction]],
    initial_slice: Optional[Sequence[Union[GridPoint, Fraction]]] = None,
    granularity: Fraction = Fraction(1),
) -> RadiusTable:
    """Escape radii from the eigenvalue modulus, the rounding effect bound,
    and the moduli of the relevant points."""
    delta = Fraction(delta)
    if delta <= 0:
        raise ValueError("the rounding effect bound must be positive")
    lam = block.eigen_modulus
    if lam == 1:
        raise ModulusOneSpectrumError("escape radii need |eigenvalue| != 1")
    moduli = [modulus_upper(v, granularity) for v in target_slice]
    if initial_slice is not None:
        moduli += [modulus_upper(v, granularity) for v in initial_slice]
    ell = max(Fraction(1), delta, *moduli) if moduli else max(Fraction(1), delta)
    denom = lam - 1 if lam > 1 else 1 - lam
    size = block.size
    out = [Fraction(0)] * size
    out[size - 1] = delta / denom + ell
    for j in range(size - 2, -1, -1):
        out[j] = (delta + out[j + 1]) / denom + ell
    beta = Fraction(2) / denom
    cap = ell * (size + 1) * (1 + beta**size)
    for c in out:
        if not ell < c <= cap:
            raise InternalInvariantError("radius chain left its proved envelope")
    return RadiusTable(lam, delta, ell, tuple(out))


class HyperbolicBlockAnalyzer:
    """Emits an escape certificate once any coordinate meets its radius."""

    def __init__(self, offset: int, table: RadiusTable) -> None:
        self.offset = offset
        self.table = table
        self._radii_sq = [c * c for c in table.radii]

    def _check(self, state: Sequence[GridPoint]) -> Optional[Certificate]:
        for j, c_sq in enumerate(self._radii_sq):
            pt = state[self.offset + j]
            if pt.modulus_sq() >= c_sq:
                return EscapedRadius(self.offset + j, self.table.radii[j])
        return None

    def observe_initial(self, state: Sequence[GridPoint]) -> Optional[Certificate]:
        return self._check(state)

    def observe(self, step_index, prev, unrounded, new) -> Optional[Certificate]:
        return self._check(new)


def _block_is_real(system: JnfSystem, block: JordanBlock, start: int, end: int) -> bool:
    if not isinstance(system.rounding, ArgandRounding):
        return False
    if not (block.eigen_angle.is_zero() or block.eigen_angle.pi_multiple == 1):
        return False
    for pt in (*system.initial[start:end], *system.target[start:end]):
        if pt.im != 0:  # type: ignore[union-attr]
            return False
    return True


def block_tables(system: JnfSystem) -> list[RadiusTable]:
    """Escape radii for every block of a system without modulus-one eigenvalues."""
    tables = []
    for block, (start, end) in zip(system.blocks, system.block_slices()):
        real_only = _block_is_real(system, block, start, end)
        delta = modulus_effect_bound(system.rounding, real_only=real_only)
        tables.append(
            radii(
                block,
                delta,
                system.target[start:end],
                system.initial[start:end],
                system.rounding.granularity,
            )
        )
    return tables


def hyperbolic_step_cap(system: JnfSystem, tables: Sequence[RadiusTable]) -> int:
    cap = 1
    for table in tables:
        for c in table.radii:
            cap *= kball_count(c, system.rounding)
    return cap


def decide_hyperbolic_jnf(system: JnfSystem) -> Verdict:
    """Decide reachability when every eigenvalue has modulus != 1.

    Orbit coordinates either meet their escape radius (a permanent no) or stay
    confined, where exact repeat detection and the ball-count pigeonhole bound
    conclude.
    """
    for block in system.blocks:
        if block.eigen_modulus == 1:
            raise ModulusOneSpectrumError(
                "a modulus-one block cannot be decided by the escape-radius method"
            )
    tables = block_tables(system)
    analyzers = [
        HyperbolicBlockAnalyzer(start, table)
        for (start, _end), table in zip(system.block_slices(), tables)
    ]
    cap = hyperbolic_step_cap(system, tables)
    return run_lock_step(system, analyzers, step_cap=cap, cap_is_state_bound=True)


# ---------------------------------------------------------------------------
# Rational matrices: exact linear algebra, Jordan form, conjugated rounding


def mat_vec(m: RationalMatrix, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
    return tuple(sum((c * x for c, x in zip(row, v)), Fraction(0)) for row in m)


def mat_mul(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    n = len(a)
    k = len(b)
    cols = len(b[0])
    return tuple(
        tuple(
            sum((a[i][t] * b[t][j] for t in range(k)), Fraction(0))
            for j in range(cols)
        )
        for i in range(n)
    )


def mat_inv(m: RationalMatrix) -> RationalMatrix:
    n = len(m)
    work = [[Fraction(v) for v in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if work[r][col] != 0), None)
        if pivot is None:
            raise ValueError("matrix is singular")
        work[col], work[pivot] = work[pivot], work[col]
        inv = 1 / work[col][col]
        work[col] = [v * inv for v in work[col]]
        for r in range(n):
            if r != col and work[r][col]:
                factor = work[r][col]
                work[r] = [v - factor * w for v, w in zip(work[r], work[col])]
    return tuple(tuple(row[n:]) for row in work)


def max_abs_row_sum(m: RationalMatrix) -> Fraction:
    return max(sum((abs(v) for v in row), Fraction(0)) for row in m)


@dataclass(frozen=True)
class ConjugatedRounding:
    """The rounding seen in the eigenbasis: z + P^-1 (round(P z) - P z).

    delta bounds the per-component effect: the grid effect bound scaled by the
    maximum absolute row sum of P^-1.
    """

    p: RationalMatrix
    p_inverse: RationalMatrix
    spec: ArgandRounding
    delta: Fraction

    def apply(self, v: Sequence[Fraction]) -> tuple[Fraction, ...]:
        pv = mat_vec(self.p, v)
        err = [
            round_real(x, self.spec.kind, self.spec.granularity) - x for x in pv
        ]
        corr = mat_vec(self.p_inverse, err)
        return tuple(x + c for x, c in zip(v, corr))


def conjugate_rounding(p: RationalMatrix, spec: ArgandRounding) -> ConjugatedRounding:
    from .rounding import effect_bound

    p_inv = mat_inv(p)
    delta = effect_bound(spec) * max_abs_row_sum(p_inv)
    return ConjugatedRounding(p, p_inv, spec, delta)


def jnf_rational(matrix: RationalMatrix) -> tuple[RationalMatrix, RationalMatrix]:
    """Exact Jordan decomposition M = P J P^-1 over the rationals.

    Raises NonRationalSpectrumError when an eigenvalue is not rational.
    """
    n = len(matrix)
    sm = sympy.Matrix(n, n, lambda i, j: sympy.Rational(matrix[i][j].numerator, matrix[i][j].denominator))
    for eigenvalue in sm.eigenvals():
        if not isinstance(sympy.nsimplify(eigenvalue), sympy.Rational):
            raise NonRationalSpectrumError(f"eigenvalue {eigenvalue} is not rational")
    p_sym, j_sym = sm.jordan_form()
    p = tuple(
        tuple(Fraction(int(p_sym[i, j].p), int(p_sym[i, j].q)) for j in range(n))
        for i in range(n)
    )
    j = tuple(
        tuple(Fraction(int(j_sym[i, j2].p), int(j_sym[i, j2].q)) for j2 in range(n))
        for i in range(n)
    )
    recon = mat_mul(mat_mul(p, j), mat_inv(p))
    if recon != tuple(tuple(row) for row in matrix):
        raise InternalInvariantError("Jordan reconstruction mismatch")
    return p, j


def parse_jordan_blocks(j: RationalMatrix) -> list[JordanBlock]:
    """Split a Jordan matrix into blocks; validates the shape exactly."""
    from .numerics import Angle

    n = len(j)
    for r in range(n):
        for c in range(n):
            if c == r or c == r + 1:
                continue
            if j[r][c] != 0:
                raise ValueError("not a Jordan matrix: stray entry")
    blocks = []
    start = 0
    while start < n:
        end = start
        while end + 1 < n and j[end][end + 1] == 1:
            if j[end + 1][end + 1] != j[start][start]:
                raise ValueError("not a Jordan matrix: eigenvalue changes inside a block")
            end += 1
        if end + 1 < n and j[end][end + 1] not in (0, 1):
            raise ValueError("not a Jordan matrix: superdiagonal entry outside {0,1}")
        eig = j[start][start]
        angle = Angle(0) if eig >= 0 else Angle(1)
        blocks.append(JordanBlock(end - start + 1, abs(eig), angle))
        start = end + 1
    return blocks


def decide_hyperbolic_general(
    system: RationalSystem,
    p: Optional[RationalMatrix] = None,
    j: Optional[RationalMatrix] = None,
) -> Verdict:
    """Decide a rational-matrix system by passing to the eigenbasis.

    The update matrix must have a rational spectrum with no modulus-one
    eigenvalue. The conjugated system z' = J z + P^-1(round(P J z) - P J z)
    is simulated exactly; its escape radii use the conjugated effect bound.
    """
    if p is None or j is None:
        p, j = jnf_rational(system.matrix)
    if mat_mul(mat_mul(p, j), mat_inv(p)) != system.matrix:
        raise ValueError("P J P^-1 does not reconstruct the system matrix")
    blocks = parse_jordan_blocks(j)
    for block in blocks:
        if block.eigen_modulus == 1:
            raise ModulusOneSpectrumError(
                "a modulus-one eigenvalue cannot be decided by the escape-radius method"
            )
    conj = conjugate_rounding(p, system.rounding)
    z0 = mat_vec(conj.p_inverse, system.initial)
    z_target = mat_vec(conj.p_inverse, system.target)
    tables = []
    at = 0
    for block in blocks:
        tables.append(
            radii(
                block,
                conj.delta,
                z_target[at : at + block.size],
                z0[at : at + block.size],
                system.rounding.granularity,
            )
        )
        at += block.size
    all_radii: list[Fraction] = []
    for t in tables:
        all_radii.extend(t.radii)
    # distinct z-states correspond to grid points of x = P z inside a box
    g = system.rounding.granularity
    cap = 1
    for row in p:
        reach = sum((abs(c) * r for c, r in zip(row, all_radii)), Fraction(0))
        cap *= 2 * math.floor(reach / g) + 1
    state = z0
    if state == z_target:
        return Reached(0)
    escaped = _z_escape(state, all_radii)
    if escaped is not None:
        return NotReached(escaped)
    visited = {state: 0}
    i = 0
    while True:
        v = mat_vec(j, state)
        state = conj.apply(v)
        i += 1
        if state == z_target:
            return Reached(i)
        escaped = _z_escape(state, all_radii)
        if escaped is not None:
            return NotReached(escaped)
        if state in visited:
            return NotReached(CycleDetected(i))
        visited[state] = i
        if i >= cap:
            return NotReached(CycleDetected(cap))


def _z_escape(state: Sequence[Fraction], radii_flat: Sequence[Fraction]) -> Optional[Certificate]:
    for d, (v, c) in enumerate(zip(state, radii_flat)):
        if abs(v) >= c:
            return EscapedRadius(d, c)
    return None
