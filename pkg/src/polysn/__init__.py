"""polysn: discrete-ordinates transport on polygonal meshes with
interior-penalty diffusion-accelerated source iteration."""

from ._version import __version__
from .bench import (
    ExperimentConfig,
    apply_overrides,
    default_config_text,
    emit_csv,
    load_config,
    mesh_stats,
    parse_config,
    run_experiment,
    write_manifest,
    write_variant_csvs,
)
from .dgspace import DgSpace, local_dimension
from .dsa import (
    MARSHAK_KAPPA,
    DiffusionCoefficients,
    DiffusionConfig,
    assemble_diffusion,
    assemble_dsa_rhs,
    face_moment_boundary,
    face_moment_interior,
    mip_penalty,
    sip_penalty,
)
from .linalg import (
    LuFactorization,
    NoConvergenceError,
    SingularMatrixError,
    SparseOperator,
    cg_solve,
    factorize,
    lu_solve,
)
from .mesh import (
    MeshConstructionError,
    MeshQuality,
    PolyMesh,
    Rectangle,
    generate_voronoi,
    lloyd_step,
    mesh_quality,
)
from .quadrature import (
    AngularQuadrature,
    PolygonRule,
    polygon_rule,
    segment_rule,
    trapezoidal_angular,
    triangle_rule,
)
from .solver import (
    InsufficientDataError,
    IterationReport,
    ReferenceSolution,
    RhoEstimate,
    dsa_iteration,
    empirical_rho,
    reference_solution,
    source_iteration,
)
from .transport import (
    AssemblyCache,
    CrossSections,
    ManufacturedProblem,
    SweepPlan,
    TransportSystem,
    assemble_load,
    assemble_scatter_mass,
    assemble_transport,
    sweep_plan,
)

__all__ = [
    "__version__",
    "AngularQuadrature",
    "AssemblyCache",
    "CrossSections",
    "DgSpace",
    "DiffusionCoefficients",
    "DiffusionConfig",
    "ExperimentConfig",
    "InsufficientDataError",
    "IterationReport",
    "LuFactorization",
    "MARSHAK_KAPPA",
    "ManufacturedProblem",
    "MeshConstructionError",
    "MeshQuality",
    "NoConvergenceError",
    "PolyMesh",
    "PolygonRule",
    "Rectangle",
    "ReferenceSolution",
    "RhoEstimate",
    "SingularMatrixError",
    "SparseOperator",
    "SweepPlan",
    "TransportSystem",
    "apply_overrides",
    "assemble_diffusion",
    "assemble_dsa_rhs",
    "assemble_load",
    "assemble_scatter_mass",
    "assemble_transport",
    "cg_solve",
    "default_config_text",
    "dsa_iteration",
    "emit_csv",
    "empirical_rho",
    "face_moment_boundary",
    "face_moment_interior",
    "factorize",
    "generate_voronoi",
    "lloyd_step",
    "load_config",
    "local_dimension",
    "lu_solve",
    "mesh_quality",
    "mesh_stats",
    "mip_penalty",
    "parse_config",
    "polygon_rule",
    "reference_solution",
    "run_experiment",
    "segment_rule",
    "sip_penalty",
    "source_iteration",
    "sweep_plan",
    "trapezoidal_angular",
    "triangle_rule",
    "write_manifest",
    "write_variant_csvs",
]
