from fastapi import FastAPI, HTTPException, Request, UploadFile, File
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
import logging
import os
from typing import List

from config import DATA_DIR, MAX_UPLOAD_SIZE, TOOL_NAME, TOOL_VERSION, configure_logging
from errors import CellipticError, InputParseError
from models import (
    OperatorRequest, OperatorFile, ValidationReport,
    SymbolRequest, SymbolValueModel, ClassifyRequest, EllipticityReportModel,
    NullspaceRequest, NullspaceReportModel,
    RieszRequest, PotentialModel, MaximalRequest,
    ProfileRequest, ProfileModel, GridInfo
)
import grid_store
from grid_calculus import dyadic_profile
from measures import DiscreteMeasure, fractional_maximal, riesz_potential
from operator_core import Operator, ensure_valid, symbol, validate
from poly_nullspace import stabilized_nullspace
from symbol_analysis import c_ellipticity_classify
from zoo import ZOO, zoo_operator

configure_logging()
logger = logging.getLogger(__name__)

app = FastAPI(title="C-elliptic Operators API", version=TOOL_VERSION)

# CORS configuration
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

grid_store.ensure_directory_structure(DATA_DIR)


@app.exception_handler(CellipticError)
async def celliptic_error_handler(request: Request, exc: CellipticError):
    """Library errors become {"detail": ...} with the error's status code"""
    logger.warning("%s %s: %s", request.method, request.url.path, exc.detail)
    return JSONResponse(status_code=exc.http_status, content={"detail": exc.detail})


def resolve(request: OperatorRequest) -> Operator:
    if request.operator is not None:
        return Operator.from_model(request.operator)
    if request.zoo:
        return zoo_operator(request.zoo, request.n, request.order)
    raise HTTPException(status_code=400, detail="Either 'operator' or 'zoo' is required")


def _measure(atoms) -> DiscreteMeasure:
    if not atoms:
        raise HTTPException(status_code=400, detail="At least one atom is required")
    return DiscreteMeasure.from_atoms([a.x for a in atoms], [a.w for a in atoms])


@app.get("/health")
async def health_check():
    """Health check endpoint"""
    return {"status": "healthy", "version": TOOL_VERSION}


@app.get("/")
async def root():
    return {"name": TOOL_NAME, "version": TOOL_VERSION, "docs": "/docs"}


# Operator endpoints
@app.get("/api/zoo")
async def list_zoo(n: int = 2):
    """Built-in operators generated for dimension n"""
    operators = {}
    for name in sorted(ZOO):
        try:
            operators[name] = zoo_operator(name, n).to_model()
        except CellipticError:
            continue
    return operators


@app.post("/api/operators/validate", response_model=ValidationReport)
async def validate_operator(operator: OperatorFile):
    """Report every invariant the operator violates"""
    return validate(Operator.from_model(operator))


@app.post("/api/symbol", response_model=SymbolValueModel)
async def evaluate_symbol(request: SymbolRequest):
    """A[xi] for xi = xi_real + i xi_imag"""
    op = ensure_valid(resolve(request))
    imag = request.xi_imag or [0.0] * len(request.xi_real)
    if len(imag) != len(request.xi_real):
        raise HTTPException(status_code=422, detail="xi_real and xi_imag differ in length")
    value = symbol(op, [complex(a, b) for a, b in zip(request.xi_real, imag)])
    return SymbolValueModel(
        frequency_real=value.frequency.real.tolist(),
        frequency_imag=value.frequency.imag.tolist(),
        matrix_real=value.matrix.real.tolist(),
        matrix_imag=value.matrix.imag.tolist(),
    )


@app.post("/api/classify", response_model=EllipticityReportModel)
def classify(request: ClassifyRequest):
    """Ellipticity and C-ellipticity verdict"""
    op = resolve(request)
    return c_ellipticity_classify(op, request.d_max, request.restarts, request.tol).to_model()


@app.post("/api/nullspace", response_model=NullspaceReportModel)
def nullspace(request: NullspaceRequest):
    op = ensure_valid(resolve(request))
    return stabilized_nullspace(op, request.d_max).to_model()


# Measure endpoints
@app.post("/api/riesz", response_model=PotentialModel)
async def riesz(request: RieszRequest):
    """Riesz potential of an atomic measure"""
    return riesz_potential(_measure(request.atoms), request.s, request.x0).to_model()


@app.post("/api/maximal")
async def maximal(request: MaximalRequest):
    """Fractional maximal function of an atomic measure"""
    value = fractional_maximal(_measure(request.atoms), request.k, request.x0, request.radii)
    return {"k": request.k, "x0": request.x0, "value": value}


# Grid endpoints
@app.post("/api/grids", response_model=GridInfo)
async def upload_grid(file: UploadFile = File(...)):
    """Upload a grid file"""
    contents = await file.read()
    if len(contents) > MAX_UPLOAD_SIZE:
        raise HTTPException(status_code=413, detail="File too large")
    info = grid_store.save_uploaded_grid(contents, file.filename or "upload.grid", DATA_DIR)
    logger.info("stored grid %s (%s)", info.grid_id, info.shape)
    return info


@app.get("/api/grids", response_model=List[GridInfo])
async def list_grids():
    return grid_store.list_grids(DATA_DIR)


@app.post("/api/grids/{grid_id}/profile", response_model=ProfileModel)
def grid_profile(grid_id: str, request: ProfileRequest):
    """Dyadic oscillation profile of a stored grid"""
    try:
        path = grid_store.get_grid_path(grid_id, DATA_DIR)
    except InputParseError:
        raise HTTPException(status_code=404, detail="Grid not found")
    if not os.path.exists(path):
        raise HTTPException(status_code=404, detail="Grid not found")
    u = grid_store.load_grid_file(path)
    op = ensure_valid(resolve(request))
    return dyadic_profile(u, op, request.x0, request.r, request.j_max).to_model()


if __name__ == "__main__":
    import uvicorn
    uvicorn.run(app, host="0.0.0.0", port=int(os.getenv("PORT", "8000")))
