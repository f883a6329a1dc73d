"""Entanglement swapping with reversible measurement order, CHSH tests with
classical feed-forward, and Bell violations across space-time."""

__version__ = "0.1.0"

from .chsh import (  # noqa: E402
    TSIRELSON,
    ChshResult,
    SettingPair,
    chsh_from_correlations,
    chsh_from_shots,
    conditioned_correlation,
    u_ij_conjugation,
    verification_observable,
)
from .decoherence import DecoherenceScenario, chsh_closed_form, decohered_chsh_exact, sweep_decoherence  # noqa: E402
from .errors import DomainError, NoBracketError, UnidentifiableError, UsageError  # noqa: E402
from .protocol import (  # noqa: E402
    BranchTable,
    ShotRecord,
    entanglement_witness,
    exact_joint_distribution,
    run_shot,
    run_shots,
)
from .quantum import (  # noqa: E402
    BellIndex,
    DensityMatrix,
    Observable,
    PureState,
    bell_state,
    depolarize,
    expectation,
    initial_state,
    measure_observable,
    project_bell,
)
from .relativity import FrameParams, SpacetimeEvent, boost_event, gamma, interval_classify, map_times, order_in_frame  # noqa: E402
from .velocity import estimate_velocity, estimate_velocity_from_shots  # noqa: E402
