"""
Grid and measure files, report writing, and the data directory layout
"""
import hashlib
import json
import os
import struct
from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ValidationError

from config import DATA_DIR
from errors import InputParseError
from grid_function import GridFunction
from measures import DiscreteMeasure
from models import GridInfo, MeasureFile

GRID_MAGIC = b"CEGRID1\0"
GRID_SUFFIX = ".grid"


def ensure_directory_structure(base: str = DATA_DIR) -> Dict[str, str]:
    """Ensure all required directories exist"""
    dirs = {
        "base": base,
        "grids": os.path.join(base, "grids"),
        "reports": os.path.join(base, "reports"),
    }
    for path in dirs.values():
        os.makedirs(path, exist_ok=True)
    return dirs


def encode_grid(u: GridFunction) -> bytes:
    header = GRID_MAGIC + struct.pack(f"<ii{u.n}i", u.n, u.dim, *u.shape)
    header += struct.pack(f"<d{u.n}d{u.n}d", u.h, *u.lower, *u.upper)
    return header + np.ascontiguousarray(u.values, dtype="<f8").tobytes()


def decode_grid(content: bytes) -> GridFunction:
    if not content.startswith(GRID_MAGIC):
        raise InputParseError("not a grid file (bad magic)")
    try:
        offset = len(GRID_MAGIC)
        n, dim = struct.unpack_from("<ii", content, offset)
        offset += 8
        if n < 1 or dim < 1:
            raise InputParseError(f"grid header has n={n}, dim={dim}")
        shape = struct.unpack_from(f"<{n}i", content, offset)
        offset += 4 * n
        h = struct.unpack_from("<d", content, offset)[0]
        offset += 8
        lower = struct.unpack_from(f"<{n}d", content, offset)
        offset += 8 * n
        upper = struct.unpack_from(f"<{n}d", content, offset)
        offset += 8 * n
    except struct.error as e:
        raise InputParseError(f"truncated grid header: {e}")
    expected = int(np.prod(shape)) * dim * 8
    if len(content) - offset != expected:
        raise InputParseError(f"grid payload has {len(content) - offset} bytes, header announces {expected}")
    values = np.frombuffer(content, dtype="<f8", offset=offset).reshape(tuple(shape) + (dim,))
    return GridFunction(lower, upper, h, values.astype(float))


def grid_info(u: GridFunction, grid_id: str, metadata: Optional[Dict[str, Any]] = None) -> GridInfo:
    return GridInfo(grid_id=grid_id, n=u.n, dim=u.dim, shape=list(u.shape), h=u.h,
                    lower=u.lower.tolist(), upper=u.upper.tolist(), metadata=metadata or {})


def sidecar_path(path: str) -> str:
    return os.path.splitext(path)[0] + ".json"


def save_grid_file(u: GridFunction, path: str, metadata: Optional[Dict[str, Any]] = None) -> str:
    """Write the binary grid and its JSON sidecar"""
    with open(path, "wb") as f:
        f.write(encode_grid(u))
    info = grid_info(u, os.path.splitext(os.path.basename(path))[0], metadata)
    with open(sidecar_path(path), "w") as f:
        f.write(dump_json(info))
    return path


def load_grid_file(path: str) -> GridFunction:
    if not os.path.exists(path):
        raise InputParseError(f"grid file not found: {path}")
    with open(path, "rb") as f:
        return decode_grid(f.read())


def save_uploaded_grid(content: bytes, filename: str, base: str = DATA_DIR) -> GridInfo:
    """Validate and store an uploaded grid under a content-derived id"""
    u = decode_grid(content)
    grid_id = hashlib.sha256(content).hexdigest()[:16]
    path = os.path.join(ensure_directory_structure(base)["grids"], grid_id + GRID_SUFFIX)
    save_grid_file(u, path, {"filename": filename})
    return grid_info(u, grid_id, {"filename": filename})


def get_grid_path(grid_id: str, base: str = DATA_DIR) -> str:
    if not grid_id.isalnum():
        raise InputParseError(f"invalid grid id '{grid_id}'")
    return os.path.join(base, "grids", grid_id + GRID_SUFFIX)


def list_grids(base: str = DATA_DIR) -> List[GridInfo]:
    """List all stored grids from their sidecars"""
    grid_dir = os.path.join(base, "grids")
    if not os.path.exists(grid_dir):
        return []
    grids = []
    for filename in sorted(os.listdir(grid_dir)):
        if filename.endswith(".json"):
            with open(os.path.join(grid_dir, filename)) as f:
                grids.append(GridInfo.model_validate_json(f.read()))
    return grids


def load_measure_file(path: str) -> DiscreteMeasure:
    """Measure JSON; a relative density_ref is resolved next to the measure file"""
    if not os.path.exists(path):
        raise InputParseError(f"measure file not found: {path}")
    with open(path) as f:
        try:
            model = MeasureFile.model_validate_json(f.read())
        except ValidationError as e:
            raise InputParseError(f"cannot parse measure file {path}: {e}")
    density = None
    if model.density_ref:
        ref = model.density_ref
        if not os.path.isabs(ref):
            ref = os.path.join(os.path.dirname(os.path.abspath(path)), ref)
        density = load_grid_file(ref)
    return DiscreteMeasure.from_model(model, density)


def save_measure_file(model: MeasureFile, path: str) -> str:
    with open(path, "w") as f:
        f.write(dump_json(model))
    return path


def dump_json(payload: Any) -> str:
    """Deterministic JSON text for models and plain data"""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json", by_alias=True)
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def write_report(payload: Any, path: Optional[str]) -> str:
    text = dump_json(payload)
    if path:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, "w") as f:
            f.write(text)
    return text
