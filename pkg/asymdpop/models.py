from sqlalchemy import Column, BigInteger, Integer, String, Float, DateTime, Index
from datetime import datetime

from .database import Base

class ExperimentRun(Base):
    """One experiment row: a (problem, configuration) pair and its metrics."""
    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, index=True)
    batch_id = Column(String(64), nullable=False)
    family = Column(String(16), nullable=False)
    n = Column(Integer, nullable=False)
    density = Column(Float, nullable=False)
    domain = Column(Integer, nullable=False)
    tightness = Column(Float, nullable=True)  # MaxDCSP only
    kp = Column(String(8), nullable=False)
    ke = Column(String(8), nullable=False)
    instance = Column(Integer, nullable=False)
    seed = Column(BigInteger, nullable=False)
    cost = Column(Float, nullable=False)
    oracle_cost = Column(Float, nullable=True)  # null when the oracle was skipped
    nclo = Column(Integer, nullable=False)
    network_load = Column(Integer, nullable=False)
    message_count = Column(Integer, nullable=False)
    max_dims = Column(Integer, nullable=False)
    privacy_loss = Column(Float, nullable=False)
    wall_ms = Column(Float, nullable=True)
    created_at = Column(DateTime, default=datetime.utcnow)

    # rows are always read back per batch
    __table_args__ = (
        Index('idx_experiment_runs_batch_id', 'batch_id'),
    )

    @classmethod
    def from_row(cls, batch_id: str, row: dict) -> "ExperimentRun":
        def optional(value):
            return None if value in ("", "n/a", None) else float(value)

        return cls(
            batch_id=batch_id,
            family=row["family"],
            n=int(row["n"]),
            density=float(row["density"]),
            domain=int(row["domain"]),
            tightness=optional(row["tightness"]),
            kp=str(row["kp"]),
            ke=str(row["ke"]),
            instance=int(row["instance"]),
            seed=int(row["seed"]),
            cost=float(row["cost"]),
            oracle_cost=optional(row["oracle_cost"]),
            nclo=int(row["nclo"]),
            network_load=int(row["network_load"]),
            message_count=int(row["message_count"]),
            max_dims=int(row["max_dims"]),
            privacy_loss=float(row["privacy_loss"]),
            wall_ms=optional(row["wall_ms"]),
        )
