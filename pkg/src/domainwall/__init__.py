"""Domain-wall and one-hot QUBO compilation of discrete quadratic models.

Submodules:

``model``     Dqm and Qubo containers, energies, bit/spin conversion
``encoders``  one-hot, domain-wall and k-hot encodings, decoding, conversion
``dof``       degree-of-freedom bounds for auxiliary-variable encodings
``problems``  assignment, QAP and TSP generators plus brute-force oracles
``sampler``   fixed-temperature Metropolis sampling and exact Boltzmann oracles
``freeze``    temperature fitting, chain strength and schedule lookups
``cli``       the ``domainwall`` command
"""

from ._version import __version__
from .dof import (
    critical_degree,
    dof_report,
    min_aux_vars,
    min_connected_degree,
    missing_dof,
    scan_critical_degree,
)
from .encoders import (
    DOMAIN_WALL,
    K_HOT,
    ONE_HOT,
    DecodeResult,
    EncodingMap,
    binary_encoding_bit_count,
    convert_one_hot_to_domain_wall,
    decode,
    encode,
    encode_domain_wall,
    encode_k_hot,
    encode_one_hot,
)
from .errors import (
    BracketError,
    DimensionError,
    DomainError,
    DomainWallError,
    ExtrapolationError,
    ParameterError,
    ResourceError,
    StructureError,
)
from .freeze import (
    ExperimentRecord,
    FreezeEstimate,
    ScheduleTable,
    ThermalModel,
    chain_strength_heuristic,
    classicality_check,
    fit_temperature,
    load_records,
    rescale_and_extract,
)
from .model import Dqm, Qubo, bit_spin_convert, dqm_energy, qubo_energy
from .problems import (
    AssignmentSpec,
    TspSpec,
    brute_force_minimize,
    brute_force_qubo,
    tsp,
    unweighted_assignment,
    weighted_qap,
)
from .sampler import (
    SampleStats,
    SamplerConfig,
    convergence_report,
    exact_feasible_fraction,
    feasible_fraction_curve,
    metropolis_run,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
