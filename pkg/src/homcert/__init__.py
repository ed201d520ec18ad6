"""Side-channel certification of QKD sources from Hong-Ou-Mandel visibilities."""

from .errors import NumericalError
from .fock import (
    HomResult,
    PrwcpPair,
    Truncation,
    fock_coincidence,
    hom_curve,
    hom_visibility,
    poisson_weights,
    prwcp_coincidence,
    prwcp_coincidence_phase_avg,
    visibility_small_mu,
)
from .keyrate import (
    ChannelModel,
    Intensities,
    IntensityGrid,
    KeyRatePoint,
    distance_scan,
    key_rate,
    max_distance,
    optimize_key_rate,
)
from .leakage import (
    ImbalanceBound,
    PairwiseFidelities,
    fidelity_sqrt_from_visibility,
    imbalance_bound,
    imbalance_uniform,
    numeric_fidelity,
)

__version__ = "0.1.0"
