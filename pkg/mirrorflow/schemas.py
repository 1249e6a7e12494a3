"""Schemas defining the layout and structure of the YAML experiment file.

- `EXPERIMENT_SCHEMA`: Defines which main sections are allowed in an experiment and the
  schema of each section.
- `SECTION_SCHEMAS`: Maps every main section name to the schema of its parameters,
  including parameter types, allowed values and default values.
"""

from __future__ import annotations
from typing import Any


PROBLEM_SCHEMA: dict[str, dict[str, Any]] = {
    "kind": {
        "type": "string",
        "allowed": ["quadratic", "linear", "scalar", "traffic"],
        "default": "quadratic",
    },
    "center": {"type": "list", "nullable": True, "default": None},
    "curvature": {"type": ["float", "list"], "default": 1.0},
    "cost": {"type": "list", "nullable": True, "default": None},
    "offset": {"type": "float", "default": 0.0},
    "slope": {"type": "float", "default": 1.0},
    "network": {"type": "string", "nullable": True, "default": None},
    "nodes": {"type": "integer", "min": 2, "default": 20},
    "extra_edges": {"type": "integer", "min": 0, "default": 40},
    "network_seed": {"type": "integer", "min": 0, "default": 0},
    "demand": {"type": "float", "default": 1.0},
    "edge_sigma": {"type": "float", "min": 0, "default": 0.25},
    "path_cap": {"type": "integer", "min": 1, "default": 64},
    "known_min": {
        "type": "dict",
        "nullable": True,
        "default": None,
        "schema": {"point": {"type": "list"}, "value": {"type": "float"}},
    },
}


REGION_SCHEMA: dict[str, dict[str, Any]] = {
    "kind": {
        "type": "string",
        "allowed": ["box", "simplex", "spectrahedron", "product"],
        "default": "box",
    },
    "lower": {"type": ["float", "list"], "default": 0.0},
    "upper": {"type": ["float", "list"], "default": 1.0},
    "dim": {"type": "integer", "min": 1, "default": 2},
    "mass": {"type": "float", "default": 1.0},
    "order": {"type": "integer", "min": 1, "default": 2},
    "blocks": {"type": "list", "schema": {"type": "dict"}, "default": []},
}


REGULARIZER_SCHEMA: dict[str, dict[str, Any]] = {
    "kind": {
        "type": "string",
        "allowed": ["euclidean", "entropic", "von_neumann"],
        "default": "euclidean",
    },
}


NOISE_SCHEMA: dict[str, dict[str, Any]] = {
    "kind": {
        "type": "string",
        "allowed": ["zero", "constant", "decaying", "path_correlated"],
        "default": "zero",
    },
    "sigma": {"type": ["float", "list"], "default": 0.0},
    "base": {"type": "float", "min": 0, "default": 1.0},
    "decay": {
        "type": "string",
        "allowed": ["inv_log", "inv_sqrt_t", "log_power"],
        "default": "inv_log",
    },
    "power": {"type": "float", "default": 1.0},
    "edge_sigma": {"type": ["float", "list"], "nullable": True, "default": None},
}


SCHEDULE_SCHEMA: dict[str, dict[str, Any]] = {
    "kind": {
        "type": "string",
        "allowed": ["constant", "power_law", "optimized"],
        "default": "constant",
    },
    "eta0": {"type": "float", "default": 1.0},
    "beta": {"type": "float", "default": 0.5},
}


INTEGRATOR_SCHEMA: dict[str, dict[str, Any]] = {
    "dt": {"type": "float", "default": 1e-3},
    "horizon": {"type": "float", "default": 10.0},
    "log_stride": {"type": "integer", "default": 1},
    "y0": {"type": "list", "nullable": True, "default": None},
}


ENSEMBLE_SCHEMA: dict[str, dict[str, Any]] = {
    "paths": {"type": "integer", "min": 1, "default": 1},
    "seed": {"type": "integer", "min": 0, "default": 0},
    "threads": {"type": "integer", "min": 1, "default": 1},
    "batch_size": {"type": "integer", "min": 1, "default": 256},
    "write_paths": {"type": "integer", "min": 0, "default": 1},
}


OUTPUT_SCHEMA: dict[str, dict[str, Any]] = {
    "directory": {"type": "string", "default": "results"},
    "excel_report": {"type": "boolean", "default": False},
}


DIAGNOSTICS_SCHEMA: dict[str, dict[str, Any]] = {
    "audit": {"type": "boolean", "default": False},
    "occupation_deltas": {"type": "list", "schema": {"type": "float"}, "default": []},
    "hitting_delta": {"type": "float", "nullable": True, "default": None},
    "burn_in_fraction": {"type": "float", "min": 0, "max": 1, "default": 0.2},
    "rate_fit_window": {
        "type": "list",
        "nullable": True,
        "schema": {"type": "float"},
        "minlength": 2,
        "maxlength": 2,
        "default": None,
    },
    "rectification": {
        "type": "string",
        "allowed": ["average", "best"],
        "default": "average",
    },
}


SECTION_SCHEMAS: dict[str, dict[str, dict[str, Any]]] = {
    "problem": PROBLEM_SCHEMA,
    "region": REGION_SCHEMA,
    "regularizer": REGULARIZER_SCHEMA,
    "noise": NOISE_SCHEMA,
    "schedule": SCHEDULE_SCHEMA,
    "integrator": INTEGRATOR_SCHEMA,
    "ensemble": ENSEMBLE_SCHEMA,
    "output": OUTPUT_SCHEMA,
    "diagnostics": DIAGNOSTICS_SCHEMA,
}


EXPERIMENT_SCHEMA: dict[str, dict[str, Any]] = {
    name: {"type": "dict", "keysrules": {"type": "string"}, "schema": schema}
    for name, schema in SECTION_SCHEMAS.items()
}
EXPERIMENT_SCHEMA["derived"] = {"type": "dict"}
