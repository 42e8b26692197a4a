"""Rank/select indices built from table lookups and grouping reductions."""

from __future__ import annotations

from .base import SpaceReport, TreeIndex, space_report
from .bitcore import BitChunkStream, PackedBitArray, PackedClient, read_window
from .container import deserialize, load, save, serialize
from .errors import (ConfigurationError, ConstructionError, ContainerError, EncodingError,
                     InvariantViolation, ProtocolError, QueryDomainError, RankSelectError,
                     UsageError)
from .optimal import OptimalIndex, optimal_build, optimal_rank, optimal_select
from .plan import ParameterPlan, build_topology, plan
from .simplified import SimplifiedStructure, simplified_build, simplified_rank, simplified_select
from .stream import build
from .tree import ProbeLog
from .tuned import TunedIndex, tuned_build, tuned_rank, tuned_select

__version__ = "0.1.0"
