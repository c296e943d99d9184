import pytest
from pathlib import Path
from fastapi.testclient import TestClient
from sqlalchemy import create_engine
from sqlalchemy.orm import sessionmaker
import numpy as np

from asymdpop.main import app
from asymdpop.database import get_db, Base
from asymdpop.dependencies import get_cache
from asymdpop.problem import Problem, load

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"

# Test database
SQLALCHEMY_DATABASE_URL = "sqlite:///./test.db"
engine = create_engine(SQLALCHEMY_DATABASE_URL, connect_args={"check_same_thread": False})
TestingSessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)

def override_get_db():
    try:
        db = TestingSessionLocal()
        yield db
    finally:
        db.close()

class MockCacheService:
    """In-memory stand-in for the Redis cache, optionally failing every call"""
    def __init__(self, simulate_failure=False):
        self.cache = {}
        self.simulate_failure = simulate_failure
        self.get_calls = 0
        self.set_calls = 0

    def get(self, key: str):
        self.get_calls += 1
        if self.simulate_failure:
            return None
        return self.cache.get(key)

    def set(self, key: str, value, ttl=None):
        self.set_calls += 1
        if self.simulate_failure:
            return False
        self.cache[key] = value
        return True

@pytest.fixture
def mock_cache():
    return MockCacheService()

@pytest.fixture
def client(mock_cache):
    # Create tables
    Base.metadata.create_all(bind=engine)

    # Override dependencies
    app.dependency_overrides[get_db] = override_get_db
    app.dependency_overrides[get_cache] = lambda: mock_cache

    with TestClient(app) as test_client:
        yield test_client

    # Clean up
    Base.metadata.drop_all(bind=engine)
    app.dependency_overrides.clear()

@pytest.fixture
def four_agent():
    """Four agents, tree 0-1, 1-3, 1-2 with pseudo edge 0-3 when rooted at 0"""
    return load(PROBLEMS / "four_agent_example.json")

@pytest.fixture
def five_agent_chain():
    """Five agents forming the chain 0-1-2-3-4 with pseudo edges 0-2, 1-3, 1-4 when rooted at 0"""
    return load(PROBLEMS / "five_agent_chain.json")

def rooted_chain(n: int, domain: int, seed: int = 0) -> Problem:
    """Chain 0-1-...-(n-1) where every agent is also constrained with agent 0."""
    rng = np.random.default_rng(seed)
    edges = {(k, k + 1) for k in range(n - 1)} | {(0, k) for k in range(2, n)}
    sides = {}
    for i, j in sorted(edges):
        sides[(i, j)] = rng.integers(0, 10, size=(domain, domain))
        sides[(j, i)] = rng.integers(0, 10, size=(domain, domain))
    return Problem.from_sides([domain] * n, sides)
