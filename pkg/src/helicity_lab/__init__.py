"""Spectral diagnostics for helicity transport in periodic 3D flow.

Layers, bottom up: `grid` (periodic grids, fields, alias-free products),
`operators` (curl, Leray projection, fractional Laplacians), `generators`
(reference and random rough fields), `norms` (Lp, Hoelder, Besov, Gagliardo
estimators), `mollify` (bump smoothing, commutators, rate sweeps),
`functionals` (energy, helicity, subfilter flux, chain bounds), `regimes`
(exact exponent arithmetic), `solver` (truncated ideal-flow integrator),
`fieldio` + `cli` (file formats and the command-line harness).
"""

__version__ = "0.1.0"

from .fieldio import read_field, write_field
from .functionals import (
    energy,
    helicity,
    helicity_chain,
    helicity_dual,
    helicity_flux,
    helicity_mollified,
    helicity_summary,
    pairing,
    smooth_identity_residuals,
    solve_pressure,
)
from .generators import (
    LacunarySpec,
    abc_flow,
    lacunary_field,
    prescribed_sobolev_field,
    taylor_green,
)
from .grid import (
    BlowUpError,
    Grid3,
    PeriodicField,
    PreconditionError,
    ResolutionError,
)
from .mollify import Mollifier, commutator, mollify, rate_sweep, reynolds_stress
from .norms import (
    besov_seminorm,
    exponent_estimate,
    gagliardo_seminorm_full,
    gagliardo_seminorm_local,
    holder_seminorm,
    lp_norm,
    modulus_of_continuity,
    spectral_sobolev_seminorm,
)
from .operators import (
    biot_savart,
    curl,
    divergence,
    fractional_laplacian,
    gradient,
    leray_project,
)
from .regimes import (
    ExponentRegime,
    balancing_delta,
    companion_threshold,
    conserves_helicity,
    embedding_threshold,
    holder_time_exponent,
    holder_time_exponent_w3,
    parse_exponent,
)
from .solver import SolverState, Trajectory, evolve, flux_identity_check

__all__ = [name for name in dir() if not name.startswith("_")]
