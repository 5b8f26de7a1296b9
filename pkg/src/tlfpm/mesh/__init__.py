from .simplicial import (
    MeshError,
    MeshParseError,
    SimplicialMesh,
    boundary_facets,
    read_mesh,
    simplex_measures,
    write_mesh,
)
from .dual import (
    DualComplex,
    FacetPieces,
    RankDeficientSupport,
    build_dual_complex,
    gradient_rank_ok,
    repair_supports,
    support_of,
)
from . import generate

__all__ = [
    "MeshError", "MeshParseError", "SimplicialMesh", "boundary_facets", "read_mesh",
    "simplex_measures", "write_mesh", "DualComplex", "FacetPieces", "RankDeficientSupport",
    "build_dual_complex", "gradient_rank_ok", "repair_supports", "support_of", "generate",
]
