"""Multicommodity flows, cut relaxations and rounding for polymatroidal
networks: graphs whose per-node polymatroids jointly cap the capacity of
incident edge groups.

Brute-force oracles verify the flow-cut guarantees at desk scale; the hot
enumeration kernels run from a compiled extension when available (see
``polyflow._kernels.BACKEND``).
"""

from ._kernels import BACKEND
from .errors import (
    CapabilityError,
    InputError,
    InternalError,
    PolyflowError,
    SolverError,
    SparsityUndefinedError,
)
from .network import (
    CutSolution,
    DemandSet,
    Edge,
    PolymatroidalNetwork,
    cut_cost,
    encode_node_capacitated,
    is_multicut,
    separated_pairs,
    sparsity,
)
from .submodular import (
    ChainDecomposition,
    ConcaveOfWeight,
    ExplicitTable,
    GroundSet,
    Modular,
    PartitionRankCap,
    SubmodularOracle,
    UniformRankCap,
    chain_decompose,
    check_polymatroid,
    convex_closure_value,
    evaluate,
    lovasz_extension,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapabilityError",
    "ChainDecomposition",
    "ConcaveOfWeight",
    "CutSolution",
    "DemandSet",
    "Edge",
    "ExplicitTable",
    "GroundSet",
    "InputError",
    "InternalError",
    "Modular",
    "PartitionRankCap",
    "PolyflowError",
    "PolymatroidalNetwork",
    "SolverError",
    "SparsityUndefinedError",
    "SubmodularOracle",
    "UniformRankCap",
    "chain_decompose",
    "check_polymatroid",
    "convex_closure_value",
    "cut_cost",
    "encode_node_capacitated",
    "evaluate",
    "is_multicut",
    "lovasz_extension",
    "separated_pairs",
    "sparsity",
]
