"""Bosonic Fock space over prime-indexed sites.

Nonlocal coherent states, their quadratic-Hamiltonian evolution and cat
doubling, Q-functions, homodyne profiles and the generalized-boson
(Moebius) sector, all on explicitly truncated finite bases.
"""

from .arithmetic import ArithmeticProfile, Occupation, factorize, primes_up_to, profile
from .dynamics import (
    HamiltonianKind,
    Residual,
    Tag,
    cat_residual,
    cat_superposition,
    energy,
    evolve,
    factorized_cat_check,
)
from .fock import (
    ConfigurationError,
    FockVector,
    TruncationSpec,
    annihilate,
    apply_diagonal_phase,
    basis_state,
    create,
    gen_shift_down,
    gen_shift_up,
    inner,
    number_expectations,
)
from .homodyne import beam_split, cat_port_density, ncs_port_density, psi, psi_site
from .qfunction import (
    equivalence_global,
    q_ncs,
    q_single,
    resolution_check_single_site,
    s_closed,
    separability_check,
)
from .states import (
    ParameterError,
    SiteParams,
    auto_truncation,
    gen_cs,
    local_cs,
    moebius_state,
    ncs,
    single_moebius,
    truncation_defect,
)

__version__ = "0.1.0"

__all__ = [
    "ArithmeticProfile",
    "Occupation",
    "factorize",
    "primes_up_to",
    "profile",
    "HamiltonianKind",
    "Residual",
    "Tag",
    "cat_residual",
    "cat_superposition",
    "energy",
    "evolve",
    "factorized_cat_check",
    "ConfigurationError",
    "FockVector",
    "TruncationSpec",
    "annihilate",
    "apply_diagonal_phase",
    "basis_state",
    "create",
    "gen_shift_down",
    "gen_shift_up",
    "inner",
    "number_expectations",
    "beam_split",
    "cat_port_density",
    "ncs_port_density",
    "psi",
    "psi_site",
    "equivalence_global",
    "q_ncs",
    "q_single",
    "resolution_check_single_site",
    "s_closed",
    "separability_check",
    "ParameterError",
    "SiteParams",
    "auto_truncation",
    "gen_cs",
    "local_cs",
    "moebius_state",
    "ncs",
    "single_moebius",
    "truncation_defect",
]
