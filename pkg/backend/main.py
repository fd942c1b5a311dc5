import os
import sys
from datetime import datetime
from typing import Any, Dict, Optional

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

# The library modules live one level up
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import settings  # noqa: E402
from chow import ChowVector, EstimatorConfig, chow_distance, chow_estimate, chow_exact  # noqa: E402
from chowlab import approx_weights  # noqa: E402
from exact_lp import recover_weights, solve_exact_chow  # noqa: E402
from func_core import LTF, AlgorithmError, ParameterError, TruthTable, function_source_from_dict  # noqa: E402
from reconstruct import IterationCapError, ReconstructParams, chow_reconstruct  # noqa: E402
from report_helpers import jsonable  # noqa: E402

settings.configure_logging()

app = FastAPI(title="chowlab", version="1.0.0")

# CORS for frontend
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],  # Restrict this in production
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.exception_handler(ParameterError)
async def parameter_error_handler(request: Request, exc: ParameterError):
    return JSONResponse(status_code=400, content={"error": type(exc).__name__, "detail": str(exc)})


@app.exception_handler(AlgorithmError)
async def algorithm_error_handler(request: Request, exc: AlgorithmError):
    content = {"error": type(exc).__name__, "detail": str(exc)}
    if isinstance(exc, IterationCapError):
        # partial result of a capped run
        content["lbf"] = exc.lbf.to_dict()
        content["trace"] = exc.trace.to_dict()
    return JSONResponse(status_code=422, content=jsonable(content))


# ============================================================================
# REQUEST MODELS
# ============================================================================

class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ChowRequest(StrictModel):
    target: Dict[str, Any]
    mode: str = "exact"
    t: float = 0.01
    delta: float = 0.1
    seed: int = 0
    samples: Optional[int] = None


class ReconstructRequest(StrictModel):
    alpha: Dict[str, Any]
    eps: float
    delta: float = 0.1
    mode: str = "exact"
    max_iters: Optional[int] = None
    seed: int = 0
    target: Optional[Dict[str, Any]] = None


class ApproxRequest(StrictModel):
    target: Dict[str, Any]
    eps: float
    delta: float = 0.1
    mode: str = "exact"
    max_iters: Optional[int] = None
    seed: int = 0
    threshold_search: bool = False


class ExactRequest(StrictModel):
    alpha: Dict[str, Any]


class WeightsRequest(StrictModel):
    table: Dict[str, Any]
    margin: float = Field(default=1.0, gt=0)


# ============================================================================
# ROUTES
# ============================================================================

@app.get("/")
def read_root():
    return {
        "status": "running",
        "project": "chowlab",
        "timestamp": datetime.now().isoformat()
    }


@app.get("/api/health")
def health_check():
    return {
        "status": "healthy",
        "service": "backend",
        "enumeration_cap": settings.enumeration_cap(),
        "lp_cap": settings.lp_cap(),
    }


@app.post("/api/chow")
def chow(req: ChowRequest):
    source = function_source_from_dict(req.target)
    if req.mode == "exact":
        alpha = chow_exact(source)
    elif req.mode == "estimated":
        cfg = EstimatorConfig(t=req.t, delta=req.delta, seed=req.seed, samples=req.samples)
        alpha = chow_estimate(source, source.n, cfg)
    else:
        raise ParameterError(f"mode must be 'exact' or 'estimated', got {req.mode!r}")
    return {"chow": alpha.to_dict(), "norm": alpha.norm()}


@app.post("/api/reconstruct")
def reconstruct(req: ReconstructRequest):
    alpha = ChowVector.from_dict(req.alpha)
    target = function_source_from_dict(req.target) if req.target is not None else None
    params = ReconstructParams(eps=req.eps, delta=req.delta, chow_mode=req.mode,
                               max_iters=req.max_iters, seed=req.seed)
    g, trace = chow_reconstruct(alpha, params, target=target)
    trace.raise_for_status()
    response = {"lbf": g.to_dict(), "trace": trace.to_dict()}
    if req.mode == "exact":
        response["dchow_final"] = chow_distance(alpha, chow_exact(g))
    return jsonable(response)


@app.post("/api/approx")
def approx(req: ApproxRequest):
    f = LTF.from_dict(req.target)
    f_star, report = approx_weights(f, req.eps, mode=req.mode, seed=req.seed, delta=req.delta,
                                    threshold_search=req.threshold_search, max_iters=req.max_iters)
    return {"ltf": f_star.to_dict(), "report": report.to_dict()}


@app.post("/api/exact")
def exact(req: ExactRequest):
    table = solve_exact_chow(ChowVector.from_dict(req.alpha))
    return {"table": table.to_dict()}


@app.post("/api/weights")
def weights(req: WeightsRequest):
    ltf = recover_weights(TruthTable.from_dict(req.table), margin=req.margin)
    return {"ltf": ltf.to_dict()}
