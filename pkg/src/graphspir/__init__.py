"""Symmetric private information retrieval on graph-replicated storage.

Servers are graph vertices and messages are edges; each message lives on the
two servers it joins. The package builds SPIR schemes for per-edge and shared
server randomness, runs them over prime fields, verifies their guarantees
exactly, and evaluates the closed-form rates.
"""

from .analysis import RateSummary, fr_bounds, fr_rate_from_srp, gr_capacity, multigraph_rates, star_fr_rate, table1
from .converters import (
    CrAssignment,
    PsiMap,
    fr_from_pir,
    fr_multigraph_from_pir,
    fr_star,
    gr_from_pir,
    gr_multigraph_from_pir,
)
from .field import FieldElement, PrimeField
from .general_scheme import GeneralScheme
from .graphs import GraphSpec, MultiGraphSpec, Replication, build_family, m_graph, signed_incidence
from .pir_base import PirScheme, check_srp, lift_pir_multigraph, pir_c3, pir_p3, pir_s4, pir_star_simple, pir_star_t
from .protocol import MessageDatabase, RandomnessPool, Scheme, TableScheme, rate_of, run_transcript
from .verifier import VerificationReport, check_db_privacy_exhaustive, check_db_privacy_linear, check_reliability
from .verifier import check_user_privacy, verify_all

__version__ = "0.1.0"

__all__ = [
    "CrAssignment", "FieldElement", "GeneralScheme", "GraphSpec", "MessageDatabase", "MultiGraphSpec",
    "PirScheme", "PrimeField", "PsiMap", "RandomnessPool", "RateSummary", "Replication", "Scheme",
    "TableScheme", "VerificationReport", "build_family", "check_db_privacy_exhaustive",
    "check_db_privacy_linear", "check_reliability", "check_srp", "check_user_privacy", "fr_bounds",
    "fr_from_pir", "fr_multigraph_from_pir", "fr_rate_from_srp", "fr_star", "gr_capacity", "gr_from_pir",
    "gr_multigraph_from_pir", "lift_pir_multigraph", "m_graph", "multigraph_rates", "pir_c3", "pir_p3",
    "pir_s4", "pir_star_simple", "pir_star_t", "rate_of", "run_transcript", "signed_incidence",
    "star_fr_rate", "table1", "verify_all",
]
