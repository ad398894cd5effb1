"""Correlation contributions to ergotropy of bipartite quantum states."""

from .closest import (
    ConstrainedClassicalResult,
    HorodeckiFamily,
    constrained_closest_classical,
    constraint_curve_f,
    horodecki_closest_separable,
    marginal_eigenbasis_dephasing,
)
from .contrib import (
    ContributionReport,
    contribution_report,
    delta_classical,
    delta_discord,
    delta_discord_pure,
    delta_entanglement,
    delta_L,
    delta_prime,
    delta_total,
    delta_total_bounds,
    free_energy_gap,
    tilde_contributions,
)
from .entropy import (
    discord_and_closest_classical,
    measurement_induced_disturbance,
    mutual_information,
    relative_entropy,
    von_neumann_entropy,
)
from .ergotropy import ergotropy, passive_state, thermal_identity_gap
from .errors import ErgocorrError, NumericalError, ValidationError
from .matcore import hermitian_eig
from .qstate import BipartiteHamiltonian, BipartiteState, ClassicalState, LocalBasisPair

__version__ = "0.1.0"
