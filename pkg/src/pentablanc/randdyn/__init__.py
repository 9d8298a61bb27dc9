"""Random dynamics: orbit engine, statistics and experiments."""
from .engine import (  # noqa: F401
    BlancSystem,
    GeneratorDistribution,
    PAIRS_CONSECUTIVE,
    PAIRS_EXT,
    PentagonSystem,
    RunStats,
    decades,
    run_blanc,
    run_lyapunov,
    run_orbit,
    run_pentagon,
    trial_rng,
)
