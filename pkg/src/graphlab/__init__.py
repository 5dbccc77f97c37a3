"""Random graphs with given degrees: samplers, explorations and walk bounds."""

__version__ = "0.1.0"

from .cm import explore_cm, l1_statistics, sample_cm, simple_probability
from .degseq import (
    DegreeSequence,
    eta_distribution,
    lattice_step,
    lower_bound_sequence,
    q_value,
    r_value,
    size_biased_pmf,
    subcritical_certificate,
)
from .errors import (
    AttemptsExhausted,
    ConfigError,
    GraphlabError,
    InvalidMass,
    NoRoot,
    NotGraphical,
    PreconditionError,
    SupportTooLarge,
)
from .graph import MultiGraph, components, count_isolated_trees, is_simple
from .latdist import LatticeDistribution, beta_from, llt_bound_check, t_bound, theta0_solve
from .um import explore_um, havel_hakimi, sample_um_rejection, sample_um_switching
from .walks import WalkSpec, exact_hit_prob, exact_stop_prob

__all__ = [name for name in dir() if not name.startswith("_")]
