"""gkplab: numerical laboratory for GKP-code logical shadow tomography."""

__version__ = "0.1.0"

from .lattice import (  # noqa: F401
    GkpCode,
    LatticeBasis,
    hexagonal_code,
    named_code,
    square_code,
    symplectic_form,
)
from .phase_space import (  # noqa: F401
    StateModel,
    make_coherent,
    make_grid_state,
    make_vacuum,
    parse_state,
    wigner_eval,
)
