"""Exact analysis of definable topologies on subsets of the rational line."""
from .decide import Verdict, decide_affinizable
from .dsl import InvalidSpecError, SpecSyntaxError, TopologySpec, emit, ensure_valid, load, parse, validate
from .embed import embed, verify_embedding
from .estimators import TopologyAnalyzer, TopologyEmbedder, check_points, check_spec
from .geom import SemilinearSet, parse_set, render
from .oracle import run_oracle
from .shadow import shadows_at, tau_closure

__all__ = [
    "InvalidSpecError", "SemilinearSet", "SpecSyntaxError", "TopologyAnalyzer", "TopologyEmbedder",
    "TopologySpec", "Verdict", "check_points", "check_spec", "decide_affinizable", "embed", "emit",
    "ensure_valid", "load", "parse", "parse_set", "render", "run_oracle", "shadows_at", "tau_closure",
    "validate", "verify_embedding",
]
__version__ = "0.1.0"
