from pydantic import BaseModel, Field, ConfigDict
from typing import Any, Dict, List, Literal, Optional, Union
from datetime import datetime

from .problem import DEFAULT_MAX_COST, ProblemDocument

# Solve schemas
class SolveRequest(BaseModel):
    problem: ProblemDocument
    k_p: Union[int, str] = "w*"
    k_e: Union[int, str] = "all"
    root: Optional[int] = Field(None, ge=0)
    trace: bool = False
    with_oracle: bool = False

class MetricsResponse(BaseModel):
    nclo: int
    network_load: int
    message_count: int
    max_dims: int
    privacy_loss: float
    utility_cells: int
    max_message_cells: int

class SolveResponse(BaseModel):
    assignment: Dict[int, int]
    cost: float
    reported_cost: float
    metrics: MetricsResponse
    kp: str
    ke: str
    induced_width: int
    oracle_cost: Optional[float] = None
    trace: Optional[List[str]] = None
    metadata: Dict[str, str] = {}
    cached: bool = False

# Problem generation
class RandomProblemRequest(BaseModel):
    family: Literal["adcop", "maxdcsp"] = "adcop"
    n: int = Field(..., ge=2, le=64)
    density: float = Field(..., gt=0, le=1)
    domain: int = Field(..., ge=1, le=32)
    tightness: float = Field(0.5, ge=0, le=1)
    max_cost: int = Field(DEFAULT_MAX_COST, ge=0)
    seed: int = 0

# Experiment schemas
class ExperimentRunResponse(BaseModel):
    model_config = ConfigDict(from_attributes=True)

    id: int
    batch_id: str
    family: str
    n: int
    density: float
    domain: int
    tightness: Optional[float]
    kp: str
    ke: str
    instance: int
    seed: int
    cost: float
    oracle_cost: Optional[float]
    nclo: int
    network_load: int
    message_count: int
    max_dims: int
    privacy_loss: float
    wall_ms: Optional[float]
    created_at: datetime

class ExperimentResponse(BaseModel):
    batch_id: str
    rows: List[ExperimentRunResponse] = []
    medians: List[Dict[str, Any]] = []
    metadata: Dict[str, Any] = {}
