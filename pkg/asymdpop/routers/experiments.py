import json
import logging
import uuid
from typing import List

from fastapi import APIRouter, Depends, HTTPException, status
from sqlalchemy.orm import Session

from ..database import get_db
from ..experiment import ExperimentSpec, output_metadata, run_experiment, summarize
from ..models import ExperimentRun
from ..schemas import ExperimentResponse, ExperimentRunResponse

logger = logging.getLogger(__name__)

# synchronous sweeps only; larger ones belong to the CLI
MAX_API_PROBLEMS = 50

router = APIRouter(tags=["experiments"])

@router.post("/experiments", response_model=ExperimentResponse, status_code=status.HTTP_201_CREATED)
def create_experiment(spec: ExperimentSpec, db: Session = Depends(get_db)):
    """Run a small sweep and store its rows under a new batch id"""
    problems = len(spec.points()) * spec.instances
    if problems > MAX_API_PROBLEMS:
        raise HTTPException(
            status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE,
            detail=f"{problems} problems requested, at most {MAX_API_PROBLEMS} per request",
        )

    frame = run_experiment(spec.model_copy(update={"jobs": 1, "trace": False}))
    batch_id = uuid.uuid4().hex
    runs = [ExperimentRun.from_row(batch_id, row) for row in frame.to_dict(orient="records")]
    db.add_all(runs)
    db.commit()
    for db_run in runs:
        db.refresh(db_run)
    logger.info(f"Stored {len(runs)} rows in batch {batch_id}")

    return ExperimentResponse(
        batch_id=batch_id,
        rows=[ExperimentRunResponse.model_validate(r) for r in runs],
        medians=json.loads(summarize(frame).to_json(orient="records")),
        metadata=output_metadata(spec),
    )

@router.get("/experiments/{batch_id}/runs", response_model=List[ExperimentRunResponse])
def get_batch_runs(batch_id: str, db: Session = Depends(get_db)):
    """All rows of one batch; this query uses the batch_id index"""
    runs = db.query(ExperimentRun).filter(ExperimentRun.batch_id == batch_id).order_by(ExperimentRun.id).all()
    if not runs:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail="Experiment batch not found"
        )
    return runs

@router.get("/runs/{run_id}", response_model=ExperimentRunResponse)
def get_run(run_id: int, db: Session = Depends(get_db)):
    db_run = db.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()
    if not db_run:
        raise HTTPException(
            status_code=status.HTTP_404_NOT_FOUND,
            detail="Run not found"
        )
    return db_run
