from .algebra import (
    AlgebraElt,
    FiniteRing,
    MatrixAlgebra,
    QuaternionOrder,
    VPoint,
    binary_form,
    rel_invariant,
)
from .majorant import majorant_series
from .orbit import (
    CLASSES,
    OrbitError,
    OrbitReport,
    epsilon_closed_form,
    epsilon_from_orbit,
    group_order,
    orbit_bfs,
    stabilizer_congruence_count,
    stabilizer_params,
    std_rep,
)

__all__ = [
    "AlgebraElt",
    "CLASSES",
    "FiniteRing",
    "MatrixAlgebra",
    "OrbitError",
    "OrbitReport",
    "QuaternionOrder",
    "VPoint",
    "binary_form",
    "epsilon_closed_form",
    "epsilon_from_orbit",
    "group_order",
    "majorant_series",
    "orbit_bfs",
    "rel_invariant",
    "stabilizer_congruence_count",
    "stabilizer_params",
    "std_rep",
]
