"""Identifiers for the flatness-deviation functionals."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..errors import ConfigInvalid


class Density(str, Enum):
    ConnNorm = "ConnNorm"
    RiemannNorm = "RiemannNorm"
    RicciNorm = "RicciNorm"
    ScalarSquare = "ScalarSquare"
    TotalScalar = "TotalScalar"


class Variable(str, Enum):
    Gamma = "Gamma"
    Metric = "Metric"
    InverseMetric = "InverseMetric"


class Gauge(str, Enum):
    none = "none"
    harmonic = "harmonic"


@dataclass(frozen=True)
class FunctionalId:
    """Which squared norm is integrated and which field it is varied in.

    The Ricci norm varied in the metric (or its inverse) is only defined here
    with the harmonic-chart Ricci formula, so those ids need ``gauge="harmonic"``.
    """

    density: Density
    variable: Variable
    gauge: Gauge = Gauge.none

    def __post_init__(self):
        try:
            object.__setattr__(self, "density", Density(self.density))
            object.__setattr__(self, "variable", Variable(self.variable))
            object.__setattr__(self, "gauge", Gauge(self.gauge))
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None
        needs_harmonic = self.density is Density.RicciNorm and self.variable is not Variable.Gamma
        if needs_harmonic and self.gauge is not Gauge.harmonic:
            raise ConfigInvalid("RicciNorm varied in the metric requires gauge='harmonic'")
        if self.gauge is Gauge.harmonic and not needs_harmonic:
            raise ConfigInvalid("gauge='harmonic' applies only to RicciNorm with a metric variable")

    @classmethod
    def parse(cls, text: str) -> FunctionalId:
        """Parse ``"Density/Variable"`` or ``"Density/Variable/harmonic"``."""
        parts = text.split("/")
        if len(parts) not in (2, 3):
            raise ConfigInvalid(f"functional id must look like 'RiemannNorm/Metric', got {text!r}")
        return cls(*parts)

    def __str__(self) -> str:
        s = f"{self.density.value}/{self.variable.value}"
        return s + "/harmonic" if self.gauge is Gauge.harmonic else s

    @property
    def is_connection(self) -> bool:
        return self.variable is Variable.Gamma


# The ids with an explicit Euler-Lagrange residual, in the order they are discussed.
EL_TABLE: tuple[FunctionalId, ...] = (
    FunctionalId("ConnNorm", "Gamma"),
    FunctionalId("ConnNorm", "Metric"),
    FunctionalId("ConnNorm", "InverseMetric"),
    FunctionalId("RiemannNorm", "Gamma"),
    FunctionalId("RiemannNorm", "InverseMetric"),
    FunctionalId("RiemannNorm", "Metric"),
    FunctionalId("RicciNorm", "Gamma"),
    FunctionalId("RicciNorm", "InverseMetric", "harmonic"),
    FunctionalId("RicciNorm", "Metric", "harmonic"),
    FunctionalId("TotalScalar", "Gamma"),
    FunctionalId("TotalScalar", "InverseMetric"),
    FunctionalId("ScalarSquare", "InverseMetric"),
)
