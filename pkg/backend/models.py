from typing import Any, Dict, List, Literal, Optional
from pydantic import BaseModel, Field

# File formats

class TermModel(BaseModel):
    alpha: List[int]
    matrix: List[List[float]]

class OperatorFile(BaseModel):
    n: int = Field(..., ge=1)
    k: int = Field(..., ge=0)
    dim_v: int = Field(..., ge=1)
    dim_w: int = Field(..., ge=1)
    terms: List[TermModel]

class RegionModel(BaseModel):
    kind: Literal["ball", "annulus"] = "ball"
    center: List[float]
    radius: float = Field(..., gt=0)
    lambda_: float = Field(0.0, alias="lambda", ge=0, le=0.5)

    class Config:
        populate_by_name = True

class AtomModel(BaseModel):
    x: List[float]
    w: List[float]

class MeasureFile(BaseModel):
    atoms: List[AtomModel] = []
    density_ref: Optional[str] = None

class PolynomialTermModel(BaseModel):
    alpha: List[int]
    coeffs: List[float]

class PolynomialModel(BaseModel):
    n: int
    dim: int
    degree: int
    terms: List[PolynomialTermModel]

class ValidationReport(BaseModel):
    ok: bool
    violations: List[str] = []

# Reports

class SymbolValueModel(BaseModel):
    frequency_real: List[float]
    frequency_imag: List[float]
    matrix_real: List[List[float]]
    matrix_imag: List[List[float]]

class CertificateModel(BaseModel):
    xi_real: List[float]
    xi_imag: List[float]
    v_real: List[float]
    v_imag: List[float]
    residual: float

class EllipticityReportModel(BaseModel):
    real_margin: float = Field(..., ge=0)
    c_elliptic_verdict: Literal["c_elliptic_evidence", "not_c_elliptic", "inconclusive"]
    certificate: Optional[CertificateModel] = None
    nullspace_dims: List[int]
    symbol_minimum: float
    stabilized: bool
    evidence: List[str] = []

class NullspaceReportModel(BaseModel):
    stabilized: bool
    degree: Optional[int] = None
    dims_by_degree: List[int]
    basis: List[PolynomialModel] = []

class PotentialModel(BaseModel):
    value: Optional[float] = None
    infinite: bool = False

class ProfileModel(BaseModel):
    center: List[float]
    radius: float
    levels: List[int]
    mean: List[List[float]]
    osc: List[float]
    annulus_mean: List[List[float]]
    annulus_osc: List[float]
    potential: List[PotentialModel]
    ball_residual: Optional[List[float]] = None
    annulus_residual: Optional[List[float]] = None
    annulus_variation: List[float]
    telescoping_slack: float
    oscillation_ratio: Optional[float] = None
    annulus_ratio: Optional[float] = None

class PointVerdictModel(BaseModel):
    x0: List[float]
    predicted: Literal["lebesgue", "sigma_candidate", "undetermined"]
    means_cauchy: bool
    osc_vanishing: bool
    consistent: bool
    potential_trend: Optional[float] = None
    radius_slopes: Dict[str, Optional[float]]
    potentials: List[PotentialModel]
    maximal_value: float
    maximal_values: List[float]
    osc_last: float

class ContinuityPairModel(BaseModel):
    x: List[float]
    y: List[float]
    distance: float
    lhs: float
    variation_term: float
    oscillation_term: float
    ratio: Optional[float] = None

class ContinuityReportModel(BaseModel):
    radius: float
    derivative_order: int
    pairs: List[ContinuityPairModel]
    suite_constant: float
    modulus: Dict[str, float]
    monotone: bool

class LinftyReportModel(BaseModel):
    center: List[float]
    radius: float
    derivative_order: int
    lhs: float
    mean_term: float
    variation_term: float
    ratio: Optional[float] = None

class ProjectionReportModel(BaseModel):
    region: RegionModel
    projection: PolynomialModel
    l1_stability_ratio: float
    poincare_lhs: Optional[float] = None
    poincare_rhs: Optional[float] = None

# Run configuration

class RunConfig(BaseModel):
    subcommand: str
    operator: Optional[str] = None
    n: int = 2
    order: Optional[int] = None
    grid: Optional[str] = None
    grids: List[str] = []
    measure: Optional[str] = None
    params: Dict[str, Any] = {}
    out: Optional[str] = None
    csv: Optional[str] = None
    seed: int = 0

class Provenance(BaseModel):
    tool: str
    version: str
    seed: int
    config: Dict[str, Any]

# API requests

class OperatorRequest(BaseModel):
    operator: Optional[OperatorFile] = None
    zoo: Optional[str] = None
    n: int = 2
    order: Optional[int] = None

class SymbolRequest(OperatorRequest):
    xi_real: List[float]
    xi_imag: Optional[List[float]] = None

class ClassifyRequest(OperatorRequest):
    d_max: Optional[int] = None
    restarts: int = Field(32, ge=1, le=1024)
    tol: float = Field(1e-8, gt=0)

class NullspaceRequest(OperatorRequest):
    d_max: int = Field(8, ge=0, le=16)

class RieszRequest(BaseModel):
    atoms: List[AtomModel]
    s: float
    x0: List[float]

class MaximalRequest(BaseModel):
    atoms: List[AtomModel]
    k: int
    x0: List[float]
    radii: Optional[List[float]] = None

class ProfileRequest(OperatorRequest):
    x0: List[float]
    r: float = Field(..., gt=0)
    j_max: int = Field(6, ge=0)

class GridInfo(BaseModel):
    grid_id: str
    n: int
    dim: int
    shape: List[int]
    h: float
    lower: List[float]
    upper: List[float]
    metadata: Dict[str, Any] = {}
