"""Random-circuit sampling lab.

Exact circuit simulation, cross-entropy benchmarking, classical spoofing
algorithms, and the diffusion-reaction model that predicts ensemble-mean
XEB and fidelity.
"""

__version__ = "0.1.0"
