import logging

from fastapi import APIRouter, Depends, HTTPException, status

from ..dependencies import CacheService, get_cache, solve_key
from ..engine import SimulationDeadlock, run
from ..oracle import SearchSpaceTooLarge, brute_force
from ..problem import (
    ProblemDocument,
    ProblemParseError,
    ProblemValidationError,
    describe,
    random_adcop,
    random_maxdcsp,
    validate,
)
from ..pseudotree import DisconnectedGraphError, build_dfs
from ..schemas import MetricsResponse, RandomProblemRequest, SolveRequest, SolveResponse
from ..solver import SolverConfig

logger = logging.getLogger(__name__)

router = APIRouter(tags=["solve"])

@router.post("/solve", response_model=SolveResponse)
def solve(request: SolveRequest, cache: CacheService = Depends(get_cache)):
    """Solve a problem document, serving repeated requests from the cache"""
    try:
        config = SolverConfig.parse(request.k_p, request.k_e)
    except ValueError as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=f"invalid configuration: {e}")

    key = solve_key(
        request.problem.model_dump(mode="json"),
        {"k_p": config.kp_label, "k_e": config.ke_label, "root": request.root,
         "trace": request.trace, "with_oracle": request.with_oracle},
    )
    cached = cache.get(key)
    if cached:
        logger.info(f"Cache hit for {key}")
        return SolveResponse(**{**cached, "cached": True})

    try:
        problem = request.problem.to_problem()
        validate(problem)
        tree = build_dfs(problem, root=request.root)
    except (ProblemParseError, ProblemValidationError, DisconnectedGraphError, ValueError) as e:
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    logger.info(f"Cache miss, solving {describe(problem, tree)}")

    oracle_cost = None
    if request.with_oracle:
        try:
            _, oracle_cost = brute_force(problem)
        except SearchSpaceTooLarge as e:
            raise HTTPException(status_code=status.HTTP_413_REQUEST_ENTITY_TOO_LARGE, detail=str(e))

    try:
        result = run(problem, tree, config, trace=request.trace)
    except SimulationDeadlock as e:
        logger.error(f"Solve failed: {e}")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=str(e))

    response = SolveResponse(
        assignment=result.assignment,
        cost=result.cost,
        reported_cost=result.reported_cost,
        metrics=MetricsResponse(**result.metrics.as_dict()),
        kp=config.kp_label,
        ke=config.ke_label,
        induced_width=result.induced_width,
        oracle_cost=oracle_cost,
        trace=result.trace,
        metadata=result.metadata,
    )
    cache.set(key, response.model_dump(mode="json"))
    return response

@router.post("/problems/random", response_model=ProblemDocument, status_code=status.HTTP_201_CREATED)
def generate_problem(request: RandomProblemRequest):
    """Generate a random ADCOP or MaxDCSP document"""
    if request.family == "maxdcsp":
        problem = random_maxdcsp(request.n, request.density, request.domain, request.tightness, seed=request.seed)
    else:
        problem = random_adcop(request.n, request.density, request.domain, max_cost=request.max_cost, seed=request.seed)
    return ProblemDocument.from_problem(problem)
