"""Key-rate analysis for BB84 with a heralded parametric down-conversion source.

Triggered and nontriggered detection statistics are combined to bound the
single-photon contribution, so photon-number-splitting attacks are detected
without decoy-state hardware.
"""

__version__ = "0.1.0"

from .bounds import (  # noqa: E402
    KeyRateResult,
    MinimizerPolicy,
    ProtocolConstants,
    StrategyRate,
    binary_entropy,
    eps_bound,
    final_rate,
    key_rate_both,
    key_rate_conventional,
    key_rate_ideal_single_photon,
    key_rate_triggered,
    xi,
)
from .channel import (  # noqa: E402
    ChannelParams,
    RateSummary,
    error_weighted_yield_n,
    observables,
    observables_closed_form,
    yield_n,
)
from .errors import (  # noqa: E402
    BracketError,
    DegenerateObservablesError,
    PdcQkdError,
    TruncationError,
    UnboundedOddsError,
    UndefinedBoundError,
    ValidationError,
    ZeroRateError,
)
from .montecarlo import AttackScenario, SimConfig, SimResult, pns_attack_vector, simulate  # noqa: E402
from .optimize import SweepRow, SweepSpec, find_cutoff, find_strategy_switch, optimize_mu, run_sweep  # noqa: E402
from .source import SourceParams, SourceStats, TailPolicy, photon_number_dist, source_stats, trigger_odds, trigger_prob  # noqa: E402
