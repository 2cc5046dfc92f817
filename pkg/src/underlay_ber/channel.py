"""Geometry and channel-estimator settings turned into per-hop statistics.

All powers are normalised to a unit noise level ``N0 = 1``, so the
interference cap ``I_T`` equals ``mu``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

__all__ = [
    "Point",
    "Topology",
    "EstimatorConfig",
    "HopParams",
    "GeometryError",
    "EstimatorTooWeakError",
    "DEFAULT_PRIMARY",
    "DEFAULT_SOURCE",
    "DEFAULT_DESTINATION",
    "DEFAULT_RELAYS",
    "default_topology",
    "path_loss_variance",
    "lmmse_error_variance",
    "build_hop_params",
    "build_chain_params",
    "db_to_linear",
]


class GeometryError(ValueError):
    """Two nodes that must be distinct share a location."""


class EstimatorTooWeakError(ValueError):
    """CSI error variance is not smaller than the channel variance."""


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate in {self!r}")

    def distance(self, other: "Point") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class Topology:
    """Primary receiver plus the secondary chain (source, relays..., destination)."""

    primary: Point
    chain: tuple[Point, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "chain", tuple(self.chain))
        if len(self.chain) < 2:
            raise GeometryError("chain needs at least a source and a destination")
        for k, (a, b) in enumerate(zip(self.chain, self.chain[1:])):
            if a == b:
                raise GeometryError(f"chain nodes {k} and {k + 1} coincide at {a}")
        for k, p in enumerate(self.chain[:-1]):
            if p == self.primary:
                raise GeometryError(f"transmitter {k} coincides with the primary user")

    @property
    def n_hops(self) -> int:
        return len(self.chain) - 1


# Example network: unit-square coordinates
DEFAULT_PRIMARY = Point(0.7, 0.5)
DEFAULT_SOURCE = Point(0.0, 0.0)
DEFAULT_DESTINATION = Point(1.0, 0.0)
DEFAULT_RELAYS = (Point(0.6, 0.2), Point(0.8, 0.3))


def default_topology(n_hops: int = 2) -> Topology:
    """Example network with ``n_hops`` hops; uses the first ``n_hops - 1`` relays."""
    if not 1 <= n_hops <= len(DEFAULT_RELAYS) + 1:
        raise ValueError(f"default topology supports 1..{len(DEFAULT_RELAYS) + 1} hops")
    relays = DEFAULT_RELAYS[: n_hops - 1]
    return Topology(DEFAULT_PRIMARY, (DEFAULT_SOURCE, *relays, DEFAULT_DESTINATION))


@dataclass(frozen=True)
class EstimatorConfig:
    """Channel-estimator quality.

    ``pilot_power=None`` selects the interference-matched rule where the
    pilot power is ``I_T / eta_tP``. ``perfect=True`` forces zero CSI error on
    every link regardless of the other fields.
    """

    l_p: int = 1
    pilot_power: Optional[float] = None
    perfect: bool = False

    def __post_init__(self) -> None:
        if int(self.l_p) != self.l_p or self.l_p < 1:
            raise ValueError(f"l_p must be a positive integer, got {self.l_p!r}")
        if self.pilot_power is not None and not self.pilot_power > 0:
            raise ValueError(f"pilot_power must be positive, got {self.pilot_power!r}")

    @classmethod
    def perfect_csi(cls) -> "EstimatorConfig":
        return cls(perfect=True)

    def label(self) -> str:
        return "perfect" if self.perfect else str(self.l_p)


@dataclass(frozen=True)
class HopParams:
    """Statistics of one hop ``t -> r`` and of the ``t -> P`` interference link."""

    eta_tr: float
    eta_tp: float
    sigma_tr: float
    sigma_tp: float
    mu: float
    lambda_tr: float = field(init=False)
    lambda_tp: float = field(init=False)
    kappa_tr: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.eta_tr > 0 and self.eta_tp > 0 and self.mu > 0):
            raise ValueError("eta_tr, eta_tp and mu must be positive")
        if self.sigma_tr < 0 or self.sigma_tp < 0:
            raise ValueError("CSI error variances must be non-negative")
        if self.sigma_tr >= self.eta_tr or self.sigma_tp >= self.eta_tp:
            raise EstimatorTooWeakError(
                f"sigma_tr={self.sigma_tr:.4g} (eta_tr={self.eta_tr:.4g}), "
                f"sigma_tp={self.sigma_tp:.4g} (eta_tp={self.eta_tp:.4g})"
            )
        lambda_tr = 1.0 / (self.eta_tr - self.sigma_tr)
        lambda_tp = 1.0 / (self.eta_tp - self.sigma_tp)
        object.__setattr__(self, "lambda_tr", lambda_tr)
        object.__setattr__(self, "lambda_tp", lambda_tp)
        object.__setattr__(self, "kappa_tr", lambda_tp / lambda_tr)

    @property
    def pdf_mass(self) -> float:
        """Total mass ``exp(lambda_tP mu sigma_tr)`` of the effective-SNR density."""
        return math.exp(self.lambda_tp * self.mu * self.sigma_tr)


def path_loss_variance(a: Point, b: Point, alpha: float) -> float:
    """Mean channel power ``d**-alpha`` between two points."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    d = a.distance(b)
    if d == 0.0:
        raise GeometryError(f"points coincide at {a}")
    return d ** (-alpha)


def lmmse_error_variance(l_p: int, pilot_power: float, eta_tr: float, n0: float = 1.0) -> float:
    """Residual error variance of the LMMSE estimate from ``l_p`` pilots."""
    if l_p < 1 or not (pilot_power > 0 and eta_tr > 0 and n0 > 0):
        raise ValueError("lmmse_error_variance needs positive inputs")
    return 1.0 / (l_p * pilot_power * eta_tr / n0 + 1.0)


def build_hop_params(
    topology: Topology,
    hop_index: int,
    alpha: float,
    mu: float,
    est: EstimatorConfig,
) -> HopParams:
    """Statistics of hop ``hop_index`` (1-based: transmitter ``hop_index - 1``)."""
    if not 1 <= hop_index <= topology.n_hops:
        raise IndexError(f"hop_index {hop_index} outside 1..{topology.n_hops}")
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    tx = topology.chain[hop_index - 1]
    rx = topology.chain[hop_index]
    eta_tr = path_loss_variance(tx, rx, alpha)
    eta_tp = path_loss_variance(tx, topology.primary, alpha)
    if est.perfect:
        sigma_tr = sigma_tp = 0.0
    else:
        pilot = mu / eta_tp if est.pilot_power is None else est.pilot_power
        sigma_tr = lmmse_error_variance(est.l_p, pilot, eta_tr)
        sigma_tp = lmmse_error_variance(est.l_p, pilot, eta_tp)
    return HopParams(eta_tr=eta_tr, eta_tp=eta_tp, sigma_tr=sigma_tr, sigma_tp=sigma_tp, mu=mu)


def build_chain_params(
    topology: Topology, alpha: float, mu: float, est: EstimatorConfig
) -> list[HopParams]:
    return [build_hop_params(topology, n, alpha, mu, est) for n in range(1, topology.n_hops + 1)]


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)
