"""Reachability deciders for linear dynamical systems with per-step rounding."""

from .numerics import Angle, CycloNum, certified_floor, embed_polar, modulus_sq, nearest_angle_index, sign_of_real
from .rounding import (
    ArgandPoint,
    ArgandRounding,
    GridPoint,
    PolarPoint,
    PolarRounding,
    RoundingKind,
    RoundingSpec,
    effect_bound,
    kball_count,
    modulus_effect_bound,
    round_real,
    round_value,
    round_vector,
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
    brute_force_decide,
    simulate,
    step,
)
from .hyperbolic import decide_hyperbolic_general, decide_hyperbolic_jnf
from .polar_decider import decide_polar
from .argand_decider import decide_expansion, decide_truncation, niven_classify
from .qbf_compiler import (
    GadgetFamily,
    compile_qbf,
    evaluate_qbf,
    parse_prefix_formula,
    parse_qdimacs,
)
from .rotation_lab import rotate_round, run_disk, run_orbit

__all__ = [
    "Angle",
    "ArgandPoint",
    "ArgandRounding",
    "CycleDetected",
    "CycloNum",
    "DivergedPastTarget",
    "EscapedRadius",
    "GridPoint",
    "JnfSystem",
    "JordanBlock",
    "NotReached",
    "PolarPoint",
    "PolarRounding",
    "RationalSystem",
    "Reached",
    "RoundingKind",
    "RoundingSpec",
    "StabilizedMismatch",
    "Undecided",
    "Verdict",
    "GadgetFamily",
    "brute_force_decide",
    "certified_floor",
    "compile_qbf",
    "decide_expansion",
    "decide_hyperbolic_general",
    "decide_hyperbolic_jnf",
    "decide_polar",
    "decide_truncation",
    "effect_bound",
    "embed_polar",
    "evaluate_qbf",
    "kball_count",
    "modulus_effect_bound",
    "modulus_sq",
    "nearest_angle_index",
    "niven_classify",
    "parse_prefix_formula",
    "parse_qdimacs",
    "round_real",
    "round_value",
    "round_vector",
    "rotate_round",
    "run_disk",
    "run_orbit",
    "sign_of_real",
    "simulate",
    "step",
]
