from .frames import (
    K_VALUES,
    PRIMED_FRAME,
    Direction,
    Frame,
    TwinReport,
    ck_table,
    frame_basis,
    k_operator,
    spin_operators,
    spin_square_table,
    squares_from_k,
    twin_check,
    upsilon,
)
from .kochen_specker import (
    KSResult,
    TriplesSet,
    canonical_ray,
    ks_satisfiable,
    load_direction_set,
    parse_direction_set,
    peres33,
)
from .possibility import PossibilityRelations, possibility_relation

__all__ = [
    "K_VALUES",
    "PRIMED_FRAME",
    "Direction",
    "Frame",
    "TwinReport",
    "ck_table",
    "frame_basis",
    "k_operator",
    "spin_operators",
    "spin_square_table",
    "squares_from_k",
    "twin_check",
    "upsilon",
    "KSResult",
    "TriplesSet",
    "canonical_ray",
    "ks_satisfiable",
    "load_direction_set",
    "parse_direction_set",
    "peres33",
    "PossibilityRelations",
    "possibility_relation",
]
