"""Run-configuration loading for the CLI.

Configs are JSON documents validated against the schema shipped in
``schemas/run_config.schema.json``; coefficient entries are expression
strings (grammar in :mod:`idepcag.expr`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import jsonschema
import numpy as np

from .coeffs import ImpulseSequence, MatrixFunction, VectorFunction
from .errors import ConfigError, DimensionError, GridError
from .grid import ChiuGrid, ExplicitGrid, UniformGrid, build
from .oracle import PicardConfig
from .vop import IVP, LinearSystem, NumericsConfig

__all__ = ["RunConfig", "load_config", "parse_config"]


@dataclass
class RunConfig:
    ivp: IVP
    numerics: NumericsConfig
    picard: PicardConfig
    output_times: np.ndarray
    output_format: str


def _schema() -> dict:
    text = resources.files("idepcag").joinpath("schemas/run_config.schema.json").read_text()
    return json.loads(text)


def _grid_spec(block: dict):
    kind = block["kind"]
    if kind == "uniform":
        if "h" not in block:
            raise ConfigError("uniform grid needs 'h'")
        return UniformGrid(h=block["h"], l=block.get("l", 0.0), beta=block.get("beta", 0.0))
    if kind == "chiu":
        if "p" not in block or "l" not in block:
            raise ConfigError("chiu grid needs 'p' and 'l'")
        return ChiuGrid(p=block["p"], l=block["l"])
    if "nodes" not in block or "anchors" not in block:
        raise ConfigError("explicit grid needs 'nodes' and 'anchors'")
    return ExplicitGrid(nodes=block["nodes"], anchors=block["anchors"])


def _impulses(block: dict | None, n: int) -> ImpulseSequence:
    if not block:
        return ImpulseSequence.none(n)
    c_expr = MatrixFunction(block["C"]) if "C" in block else None
    d_expr = VectorFunction(block["D"]) if "D" in block else None
    if c_expr is not None and c_expr.n != n:
        raise ConfigError(f"impulse matrix C must be {n}x{n}")
    if d_expr is not None and d_expr.n != n:
        raise ConfigError(f"impulse vector D must have {n} entries")
    c_items, d_items = {}, {}
    for item in block.get("items", ()):
        k = int(item["k"])
        if "C" in item:
            C = np.asarray(item["C"], dtype=float)
            if C.shape != (n, n):
                raise ConfigError(f"impulse item at k={k}: C must be {n}x{n}")
            c_items[k] = C
        if "D" in item:
            D = np.asarray(item["D"], dtype=float)
            if D.shape != (n,):
                raise ConfigError(f"impulse item at k={k}: D must have {n} entries")
            d_items[k] = D
    return ImpulseSequence(
        n=n,
        c_expr=c_expr,
        d_expr=d_expr,
        c_items=c_items,
        d_items=d_items,
        k_range=(block.get("k_min"), block.get("k_max")),
    )


def parse_config(doc: dict) -> RunConfig:
    """Validate a parsed JSON document and assemble the run objects."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as err:
        path = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise ConfigError(f"config schema violation at {path}: {err.message}") from err

    sys_block = doc["system"]
    n = sys_block["n"]
    try:
        A = MatrixFunction(sys_block["A"])
        B = MatrixFunction(sys_block["B"])
        F = VectorFunction(sys_block["F"]) if "F" in sys_block else None
        if A.n != n or B.n != n or (F is not None and F.n != n):
            raise ConfigError(f"coefficient dimensions must all equal n={n}")
        system = LinearSystem(A=A, B=B, F=F, impulses=_impulses(sys_block.get("impulses"), n))
        partition = build(_grid_spec(doc["grid"]), doc["grid"]["window"])
        ivp = IVP(
            system=system,
            partition=partition,
            tau=doc["ivp"]["tau"],
            y0=doc["ivp"]["y0"],
        )
    except (DimensionError, GridError) as err:
        raise ConfigError(str(err)) from err

    num_block = doc.get("numerics", {})
    numerics = NumericsConfig(
        steps_per_unit=num_block.get("steps_per_unit", 256),
        quad_order=num_block.get("quad_order", 16),
        transition_method=num_block.get("transition_method", "auto"),
        cond_limit=num_block.get("cond_limit", 1e12),
        inverse_residual_tol=num_block.get("inverse_residual_tol", 1e-10),
    )
    picard = PicardConfig(
        grid_points_per_interval=num_block.get("picard_points", 512),
        max_iterations=num_block.get("picard_max_iterations", 200),
        tolerance=num_block.get("picard_tol", 1e-10),
    )

    out_block = doc.get("output", {})
    hi = partition.window[1]
    if "times" in out_block:
        times = np.asarray(out_block["times"], dtype=float)
        if np.any(np.diff(times) < 0):
            raise ConfigError("output times must be sorted ascending")
        if times[0] < ivp.tau or times[-1] > hi:
            raise ConfigError(
                f"output times must lie within [{ivp.tau}, {hi}]"
            )
    else:
        times = np.linspace(ivp.tau, hi, out_block.get("samples", 200))
    return RunConfig(
        ivp=ivp,
        numerics=numerics,
        picard=picard,
        output_times=times,
        output_format=out_block.get("format", "csv"),
    )


def load_config(path: str) -> RunConfig:
    """Read, validate, and assemble a config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from err
    return parse_config(doc)
