"""BER of underlay decode-and-forward multi-hop cognitive radio links with imperfect CSI."""
from .analytic import ModParams, chain_ber, end_to_end_ber, hop_ber, hop_ber_quadrature
from .channel import EstimatorConfig, HopParams, Point, Topology, build_hop_params, default_topology
from .kernels import BACKEND
from .simulator import BerEstimate, SimConfig, estimate_ber, estimate_interference_probability

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BerEstimate",
    "EstimatorConfig",
    "HopParams",
    "ModParams",
    "Point",
    "SimConfig",
    "Topology",
    "build_hop_params",
    "chain_ber",
    "default_topology",
    "end_to_end_ber",
    "estimate_ber",
    "estimate_interference_probability",
    "hop_ber",
    "hop_ber_quadrature",
]
