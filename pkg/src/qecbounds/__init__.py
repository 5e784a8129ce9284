"""Semidefinite hierarchies bounding the entanglement fidelity of quantum
error correcting codes, with certificates, seesaw lower bounds and de Finetti
bound calculators."""

__version__ = "0.1.0"

from .backend import SolverConfig, SolverResult, compile_program, embed_real, solve
from .bounds import dep_lp_bound, sdp_bound
from .builders import (
    HierarchySpec,
    build_dep_lp,
    build_first_level_symmetrized,
    build_generic_bilinear,
    build_hierarchy,
    qec_bilinear_instance,
    x_coeff,
)
from .certify import RankReport, extract_code, logdet_rank_min, numeric_rank, rank_loop
from .channels import (
    QuantumChannel,
    amplitude_damping,
    bit_flip,
    depolarizing,
    identity_channel,
    load_channel,
    pauli_flip,
    random_channel,
    save_channel,
    tensor_power,
    werner_holevo,
)
from .codes import CodePair, InstrumentCode, code_from_channels, evaluate_code, trivial_code
from .definetti import (
    DistortionBound,
    Measurement,
    definetti_bound,
    distortion_ratio,
    measure_side_B,
    two_design_measurement,
)
from .errors import (
    CertificationError,
    ConstructionError,
    DegenerateInput,
    DomainError,
    ExtractionError,
    LabelError,
    QecBoundsError,
    ResourceError,
    ShapeError,
    SolverError,
)
from .program import ConicProgram, ConstraintBlock, LinearForm, Variable
from .seesaw import SeesawConfig, seesaw_lower_bound
from .tensor import HermitianOperator, SystemLayout, partial_trace, partial_transpose, permute_subsystems
