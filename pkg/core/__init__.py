"""
Detective Core Module
=====================

Graph-based active evidence search over long videos.

Components:
- segmenter.py / affinity_graph.py: frames -> segments -> sparse affinity graph
- diffusion.py: belief propagation on the graph
- scoring.py / facets.py: evidence scoring, query facets and priors
- detective_loop.py / selection.py: budgeted search loop, Graph-NMS, packaging
- pipeline.py / benchmark.py: end-to-end runs and the planted-clue benchmark
"""

from .error_handler import DetectiveError, InputError, ProviderError, InvariantViolation
from .config import DetectiveConfig, load_config

__version__ = "1.0.0"
