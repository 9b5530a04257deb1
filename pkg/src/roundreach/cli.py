"""Command-line frontend: JSON instances in, JSON verdicts out.

Exit status is 0 when the instance was decided either way, 2 when it falls
outside every fragment this tool can decide, and 1 on bad input.  Verdicts
are printed as a single JSON object on stdout; rotation grids go out as CSV
and `bounds` prints human-readable tables.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from typing import Optional, Sequence, Union

from .argand_decider import (
    argand_step_cap,
    decide_expansion,
    decide_truncation,
    truncation_bounds,
)
from .errors import (
    ModulusOneSpectrumError,
    NonRationalSpectrumError,
    RoundReachError,
)
from .hyperbolic import (
    conjugate_rounding,
    decide_hyperbolic_general,
    decide_hyperbolic_jnf,
    jnf_rational,
    mat_vec,
    parse_jordan_blocks,
    radii,
)
from .numerics import Angle
from .polar_decider import decide_polar, polar_step_cap, resource_bounds
from .qbf_compiler import (
    GadgetFamily,
    HardnessInstance,
    compile_qbf,
    parse_prefix_formula,
    parse_qdimacs,
    perturb,
)
from .rotation_lab import emit_grid, grid_csv, parse_theta, run_disk
from .rounding import (
    ArgandPoint,
    ArgandRounding,
    PolarPoint,
    PolarRounding,
    RoundingKind,
    RoundingSpec,
    modulus_effect_bound,
)
from .system import (
    CycleDetected,
    DivergedPastTarget,
    EscapedRadius,
    JnfSystem,
    JordanBlock,
    NotReached,
    RationalSystem,
    Reached,
    StabilizedMismatch,
    Undecided,
    Verdict,
    rational_simulate,
    simulate,
)

VERSION = 1

Instance = Union[RationalSystem, JnfSystem]


# ---------------------------------------------------------------------------
# Rational / angle / point (de)serialization


def _parse_rational(text) -> Fraction:
    if not isinstance(text, str):
        raise ValueError(f"expected a rational string, got {text!r}")
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational {text!r}") from exc


def _rational_str(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def _parse_angle(text) -> Angle:
    if not isinstance(text, str) or not text.endswith("pi"):
        raise ValueError(f"expected an angle like '1/2 pi', got {text!r}")
    return Angle(_parse_rational(text[: -len("pi")].strip()))


def _angle_str(angle: Angle) -> str:
    return f"{_rational_str(angle.pi_multiple)} pi"


def _require_fields(obj: dict, required: Sequence[str], what: str) -> None:
    missing = [k for k in required if k not in obj]
    if missing:
        raise ValueError(f"{what} is missing field(s) {missing}")
    unknown = [k for k in obj if k not in required]
    if unknown:
        raise ValueError(f"{what} has unknown field(s) {unknown}")


def _parse_rounding(obj) -> RoundingSpec:
    if not isinstance(obj, dict):
        raise ValueError("rounding must be an object")
    shape = obj.get("shape")
    if shape == "argand":
        _require_fields(obj, ("shape", "kind", "granularity"), "argand rounding")
        return ArgandRounding(
            RoundingKind(obj["kind"]), _parse_rational(obj["granularity"])
        )
    if shape == "polar":
        _require_fields(
            obj, ("shape", "kind", "angle_resolution", "granularity"), "polar rounding"
        )
        resolution = obj["angle_resolution"]
        if not isinstance(resolution, int):
            raise ValueError("angle_resolution must be an integer")
        return PolarRounding(
            RoundingKind(obj["kind"]), resolution, _parse_rational(obj["granularity"])
        )
    raise ValueError(f"unknown rounding shape {shape!r}")


def _rounding_json(spec: RoundingSpec) -> dict:
    if isinstance(spec, PolarRounding):
        return {
            "shape": "polar",
            "kind": spec.modulus_kind.value,
            "angle_resolution": spec.angle_resolution,
            "granularity": _rational_str(spec.granularity),
        }
    return {
        "shape": "argand",
        "kind": spec.kind.value,
        "granularity": _rational_str(spec.granularity),
    }


def _parse_point(obj, spec: RoundingSpec):
    if not isinstance(obj, dict):
        raise ValueError(f"expected a point object, got {obj!r}")
    if isinstance(spec, PolarRounding):
        _require_fields(obj, ("modulus", "angle_index"), "polar point")
        index = obj["angle_index"]
        if not isinstance(index, int):
            raise ValueError("angle_index must be an integer")
        return PolarPoint(_parse_rational(obj["modulus"]), index)
    _require_fields(obj, ("re", "im"), "argand point")
    return ArgandPoint(_parse_rational(obj["re"]), _parse_rational(obj["im"]))


def _point_json(point) -> dict:
    if isinstance(point, PolarPoint):
        return {
            "modulus": _rational_str(point.modulus),
            "angle_index": point.angle_index,
        }
    return {"re": _rational_str(point.re), "im": _rational_str(point.im)}


# ---------------------------------------------------------------------------
# Instance files


def parse_instance(text: str) -> Instance:
    """Parse an instance file; rejects unknown fields and bad shapes."""
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("instance file must hold a JSON object")
    if obj.get("version") != VERSION:
        raise ValueError(f"unsupported instance version {obj.get('version')!r}")
    kind = obj.get("kind")
    if kind == "rational":
        _require_fields(
            obj,
            ("version", "kind", "rounding", "matrix", "initial", "target"),
            "rational instance",
        )
        spec = _parse_rounding(obj["rounding"])
        if not isinstance(spec, ArgandRounding):
            raise ValueError("a rational-matrix instance needs componentwise rounding")
        matrix = tuple(
            tuple(_parse_rational(c) for c in row) for row in obj["matrix"]
        )
        initial = tuple(_parse_rational(v) for v in obj["initial"])
        target = tuple(_parse_rational(v) for v in obj["target"])
        return RationalSystem(matrix, initial, target, spec)
    if kind == "jnf":
        _require_fields(
            obj,
            ("version", "kind", "rounding", "blocks", "initial", "target"),
            "jnf instance",
        )
        spec = _parse_rounding(obj["rounding"])
        blocks = []
        for entry in obj["blocks"]:
            _require_fields(entry, ("size", "modulus", "angle"), "jordan block")
            if not isinstance(entry["size"], int):
                raise ValueError("block size must be an integer")
            blocks.append(
                JordanBlock(
                    entry["size"],
                    _parse_rational(entry["modulus"]),
                    _parse_angle(entry["angle"]),
                )
            )
        initial = tuple(_parse_point(p, spec) for p in obj["initial"])
        target = tuple(_parse_point(p, spec) for p in obj["target"])
        return JnfSystem(tuple(blocks), initial, target, spec)
    raise ValueError(f"unknown instance kind {kind!r}")


def serialize_instance(system: Instance) -> str:
    """Canonical instance text; parse followed by serialize is the identity
    on its own output."""
    if isinstance(system, RationalSystem):
        obj = {
            "version": VERSION,
            "kind": "rational",
            "rounding": _rounding_json(system.rounding),
            "matrix": [[_rational_str(c) for c in row] for row in system.matrix],
            "initial": [_rational_str(v) for v in system.initial],
            "target": [_rational_str(v) for v in system.target],
        }
    else:
        obj = {
            "version": VERSION,
            "kind": "jnf",
            "rounding": _rounding_json(system.rounding),
            "blocks": [
                {
                    "size": b.size,
                    "modulus": _rational_str(b.eigen_modulus),
                    "angle": _angle_str(b.eigen_angle),
                }
                for b in system.blocks
            ],
            "initial": [_point_json(p) for p in system.initial],
            "target": [_point_json(p) for p in system.target],
        }
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# Dispatch


def dispatch(system: Instance) -> Union[Verdict, Undecided]:
    """Route an instance to the decider covering it, if any."""
    if isinstance(system, RationalSystem):
        try:
            return decide_hyperbolic_general(system)
        except NonRationalSpectrumError as exc:
            return Undecided(str(exc))
        except ModulusOneSpectrumError:
            return Undecided(
                "the matrix has a modulus-one eigenvalue; for a general rational "
                "matrix no fragment of this tool applies"
            )
    spec = system.rounding
    if isinstance(spec, PolarRounding):
        return decide_polar(system)
    if spec.kind is RoundingKind.TRUNCATE:
        return decide_truncation(system)
    if spec.kind is RoundingKind.EXPAND:
        return decide_expansion(system)
    if all(b.eigen_modulus != 1 for b in system.blocks):
        return decide_hyperbolic_jnf(system)
    return Undecided(
        f"a modulus-one eigenvalue under componentwise {spec.kind.value} rounding "
        "is outside every fragment this tool decides (for minimal-error rounding "
        "even the single rotation block is not known to be decidable)"
    )


def _certificate_json(certificate) -> dict:
    if isinstance(certificate, CycleDetected):
        return {"type": "cycle_detected", "step_bound": certificate.step_bound}
    if isinstance(certificate, EscapedRadius):
        return {
            "type": "escaped_radius",
            "dimension": certificate.dimension,
            "radius": _rational_str(certificate.radius),
        }
    if isinstance(certificate, DivergedPastTarget):
        return {"type": "diverged_past_target", "dimension": certificate.dimension}
    if isinstance(certificate, StabilizedMismatch):
        return {"type": "stabilized_mismatch", "dimension": certificate.dimension}
    raise TypeError(f"not a certificate: {certificate!r}")


def verdict_json(verdict: Union[Verdict, Undecided], system: Instance) -> dict:
    if isinstance(verdict, Reached):
        if isinstance(system, RationalSystem):
            witness = [_rational_str(v) for v in system.target]
        else:
            witness = [_point_json(p) for p in system.target]
        return {"outcome": "reached", "step": verdict.step, "witness": witness}
    if isinstance(verdict, NotReached):
        return {
            "outcome": "not-reached",
            "certificate": _certificate_json(verdict.certificate),
        }
    return {"outcome": "undecided-by-this-tool", "reason": verdict.reason}


# ---------------------------------------------------------------------------
# Subcommands


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout)
    sys.stdout.write("\n")


def _cmd_decide(args: argparse.Namespace) -> int:
    system = parse_instance(_read(args.instance))
    verdict = dispatch(system)
    _emit(verdict_json(verdict, system))
    return 2 if isinstance(verdict, Undecided) else 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    system = parse_instance(_read(args.instance))
    if args.steps < 0:
        raise ValueError("--steps must be nonnegative")
    if isinstance(system, RationalSystem):
        states = rational_simulate(system, args.steps)
        rows = [[_rational_str(v) for v in s] for s in states]
    else:
        states = simulate(system, args.steps)
        rows = [[_point_json(p) for p in s] for s in states]
    _emit({"states": rows})
    return 0


def _bounds_lines(system: Instance) -> list[str]:
    lines = []
    if isinstance(system, RationalSystem):
        p, j = jnf_rational(system.matrix)
        blocks = parse_jordan_blocks(j)
        conj = conjugate_rounding(p, system.rounding)
        z0 = mat_vec(conj.p_inverse, system.initial)
        zt = mat_vec(conj.p_inverse, system.target)
        lines.append(f"eigenbasis rounding effect: {_rational_str(conj.delta)}")
        all_radii: list[Fraction] = []
        at = 0
        for i, block in enumerate(blocks):
            if block.eigen_modulus == 1:
                raise ModulusOneSpectrumError(
                    "no escape radii exist for a modulus-one eigenvalue"
                )
            table = radii(
                block,
                conj.delta,
                zt[at : at + block.size],
                z0[at : at + block.size],
                system.rounding.granularity,
            )
            at += block.size
            lines.append(
                f"block {i}: size {block.size}, "
                f"eigenvalue modulus {_rational_str(block.eigen_modulus)}"
            )
            lines.append(
                "  escape radius per dimension: "
                + ", ".join(_rational_str(r) for r in table.radii)
            )
            all_radii.extend(table.radii)
        g = system.rounding.granularity
        cap = 1
        for row in p:
            reach = sum(
                (abs(c) * r for c, r in zip(row, all_radii)), Fraction(0)
            )
            cap *= 2 * (reach // g) + 1
        lines.append(f"step cap: {cap}")
        return lines
    spec = system.rounding
    for i, block in enumerate(system.blocks):
        lines.append(
            f"block {i}: size {block.size}, "
            f"eigenvalue modulus {_rational_str(block.eigen_modulus)}, "
            f"angle {_angle_str(block.eigen_angle)}"
        )
        if block.eigen_modulus != 1:
            start, end = system.block_slices()[i]
            table = radii(
                block,
                modulus_effect_bound(spec),
                system.target[start:end],
                system.initial[start:end],
                spec.granularity,
            )
            lines.append(
                "  escape radius per dimension: "
                + ", ".join(_rational_str(r) for r in table.radii)
            )
            continue
        if isinstance(spec, PolarRounding):
            bounds = resource_bounds(system, i)
        else:
            bounds = truncation_bounds(system, i)
        lines.append(
            "  modulus ceiling per dimension: "
            + ", ".join(_rational_str(u) for u in bounds.modulus_bounds)
        )
        lines.append(
            "  settle bound per dimension:    "
            + ", ".join(str(t) for t in bounds.settle_bounds)
        )
        lines.append(f"  growth base: {_rational_str(bounds.growth_base)}")
    if isinstance(spec, PolarRounding):
        lines.append(f"step cap: {polar_step_cap(system)}")
    elif spec.kind in (RoundingKind.TRUNCATE, RoundingKind.EXPAND):
        lines.append(f"step cap: {argand_step_cap(system)}")
    return lines


def _cmd_bounds(args: argparse.Namespace) -> int:
    system = parse_instance(_read(args.instance))
    for line in _bounds_lines(system):
        print(line)
    return 0


def hardness_json(instance: HardnessInstance) -> dict:
    """Sparse serialization of a compiled hardness instance."""
    return {
        "version": VERSION,
        "kind": "hardness",
        "family": instance.program.family.value,
        "rounding": _rounding_json(instance.rounding),
        "dimension": instance.dimension,
        "variables": instance.program.var_count,
        "sweep_length": instance.program.step_count,
        "factor": _rational_str(instance.factor),
        "rows": [
            [[col, _rational_str(coef)] for col, coef in row]
            for row in instance.rows
        ],
        "initial": list(instance.initial),
        "target": list(instance.target),
    }


def _cmd_compile_qbf(args: argparse.Namespace) -> int:
    text = _read(args.formula)
    formula = parse_qdimacs(text) if args.qdimacs else parse_prefix_formula(text)
    instance = compile_qbf(formula, GadgetFamily(args.family))
    if args.perturb:
        instance = perturb(instance, Fraction(11, 10))
    payload = json.dumps(hardness_json(instance), indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
        _emit(
            {
                "dimension": instance.dimension,
                "sweep_length": instance.program.step_count,
                "out": args.out,
            }
        )
    else:
        sys.stdout.write(payload)
    return 0


def _cmd_rotate(args: argparse.Namespace) -> int:
    if args.radius < 0:
        raise ValueError("--radius must be nonnegative")
    if args.budget < 1:
        raise ValueError("--budget must be positive")
    theta = parse_theta(args.theta)
    report = run_disk(args.radius, theta, budget=args.budget)
    if args.out:
        emit_grid(report, args.out)
        _emit(
            {
                "radius": args.radius,
                "theta": report.theta,
                "starts": len(report.orbits) + len(report.unresolved),
                "unresolved": len(report.unresolved),
                "cells": len(report.cells),
                "max_modulus_sq": _rational_str(report.max_modulus_sq()),
                "out": args.out,
            }
        )
    else:
        sys.stdout.write(grid_csv(report))
    return 0


# ---------------------------------------------------------------------------
# Entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roundreach",
        description="decide reachability for linear systems with per-step rounding",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide an instance file ('-' for stdin)")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_decide)

    p = sub.add_parser("simulate", help="print the first N+1 orbit states")
    p.add_argument("instance")
    p.add_argument("--steps", type=int, required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bounds", help="print the resource tables for an instance")
    p.add_argument("instance")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("compile-qbf", help="compile a quantified formula")
    p.add_argument("formula", help="formula file ('-' for stdin)")
    p.add_argument(
        "--family",
        choices=[f.value for f in GadgetFamily],
        default=GadgetFamily.MINIMAL_ERROR.value,
    )
    p.add_argument("--qdimacs", action="store_true", help="input is QDIMACS")
    p.add_argument("--perturb", action="store_true", help="scale gadgets by 11/10")
    p.add_argument("-o", "--out", help="write the instance here instead of stdout")
    p.set_defaults(func=_cmd_compile_qbf)

    p = sub.add_parser("rotate", help="round-and-rotate every lattice point in a disk")
    p.add_argument("--radius", type=int, required=True)
    p.add_argument("--theta", required=True, help="angle, e.g. '1/42 pi'")
    p.add_argument("--budget", type=int, default=1_000_000)
    p.add_argument("--out", help="write the CSV here instead of stdout")
    p.set_defaults(func=_cmd_rotate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RoundReachError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
