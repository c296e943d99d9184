from fastapi import FastAPI
import logging
import os
from contextlib import asynccontextmanager
from dotenv import load_dotenv

from .database import Base, engine
from . import models  # noqa: F401  registers ExperimentRun on Base
from .routers import experiments, solve

load_dotenv()

logging.basicConfig(level=os.getenv("LOG_LEVEL", "INFO"))
logger = logging.getLogger(__name__)

@asynccontextmanager
async def lifespan(app: FastAPI):
    # Create tables
    Base.metadata.create_all(bind=engine)
    yield

app = FastAPI(
    title="AsymDPOP Service",
    description="Complete ADCOP solving with AsymDPOP, experiment sweeps and stored results",
    version="1.0.0",
    lifespan=lifespan
)

app.include_router(solve.router)
app.include_router(experiments.router)

@app.get("/health")
async def health_check():
    """Health check endpoint."""
    return {"status": "healthy"}
