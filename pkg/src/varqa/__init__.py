"""Variational quantum annealing for electronic-structure Hamiltonians."""
from .errors import (
    BudgetExceeded,
    DimensionTooLarge,
    EmptyDistribution,
    ImaginaryResidue,
    NonUnitState,
    ParseError,
    ShapeError,
    UnsupportedConversion,
    VarqaError,
)
from .hamiltonian import (
    DeflatedHamiltonian,
    MolecularIntegrals,
    PauliHamiltonian,
    deflate,
    exact_diagonalize,
    jordan_wigner,
    molecular_hamiltonian,
    parse_fcidump,
    parse_pauli_text,
    read_fcidump,
    read_pauli_text,
)
from .optimizer import (
    HARTREE_TO_KCAL,
    DigitizerSpec,
    VarqaResult,
    alpha_varqa,
    enumerate_digitizer,
    excited_state_search,
    fine_tune,
    varqa_search,
)
from .sampler import (
    AnnealSchedule,
    IsingAnsatz,
    SamplerConfig,
    gibbs_distribution,
    sample,
    simulated_anneal,
)
from .trial_state import (
    SignPattern,
    TrialState,
    build_trial_state,
    expected_energy,
    optimize_signs,
    transition_element,
)

__version__ = "0.1.0"
