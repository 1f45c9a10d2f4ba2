from abc import ABC, abstractmethod
from typing import Optional

from ..models import FeatureBatch
from ..solver.gfc import DEFAULT_MARGIN
from ..solver.green import GreenOperatorCache, default_cache


class BaseLinearLayer(ABC):
    """
    Abstract base class for parameter-free linear layers.
    ``adjoint`` must be the exact transpose of ``forward`` so the layer can sit
    inside backpropagation: <forward(x), y> == <x, adjoint(y)>.
    """

    def __init__(self, op_cache: Optional[GreenOperatorCache] = None, margin: int = DEFAULT_MARGIN):
        self.op_cache = op_cache if op_cache is not None else default_cache()
        self.margin = margin

    @abstractmethod
    def forward(self, batch: FeatureBatch) -> FeatureBatch:
        pass

    @abstractmethod
    def adjoint(self, upstream: FeatureBatch) -> FeatureBatch:
        pass
