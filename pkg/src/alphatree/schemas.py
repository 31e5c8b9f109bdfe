"""JSON Schema descriptions of the CLI's JSON outputs and sidecars.

CSV layouts, one line per record after a ``# config: {...}`` header:

* ``grow``: ``n,alpha,seed,height,mean_leaf_depth,V_1..V_R`` (or ``code``)
* ``exact``: ``tree,exact_pi,oracle_pi``
* ``ball-finite``: ``shape,radius,n,alpha,probability``
* ``ball-limit``: ``shape,radius,alpha,truncation,lower,upper,midpoint``
* ``sample-env``: ``index,capped,V_1..V_R,ball``
* ``dims *``: ``x,y,stderr``
"""
from __future__ import annotations

_CONFIG = {"type": "object", "required": ["command", "seed", "rng_version"]}

_NUM = {"type": "number"}

FIT = {
    "type": "object",
    "required": ["slope", "slope_stderr", "window", "dimension", "dimension_stderr", "points"],
    "properties": {
        "slope": _NUM,
        "slope_stderr": {"type": "number", "minimum": 0},
        "intercept": _NUM,
        "window": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
        "dimension": _NUM,
        "dimension_stderr": {"type": "number", "minimum": 0},
        "points": {"type": "integer", "minimum": 2},
    },
}

DIMS_SIDECAR = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "dims sidecar",
    "type": "object",
    "required": ["config", "fit", "seed", "capped_draws", "environments"],
    "properties": {
        "config": _CONFIG,
        "fit": FIT,
        "seed": {"type": "integer", "minimum": 0},
        "capped_draws": {"type": "integer", "minimum": 0},
        "environments": {"type": "integer", "minimum": 1},
        "target": _NUM,
        "max_error_bound": {"type": "number", "minimum": 0},
    },
}

RECORDS = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tabular output",
    "type": "object",
    "required": ["config", "columns", "rows"],
    "properties": {
        "config": _CONFIG,
        "columns": {"type": "array", "items": {"type": "string"}},
        "rows": {"type": "array", "items": {"type": "array"}},
    },
}

VALIDATION_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "validation report",
    "type": "object",
    "required": ["config", "level", "passed", "checks"],
    "properties": {
        "config": _CONFIG,
        "level": {"enum": ["quick", "full"]},
        "passed": {"type": "boolean"},
        "checks": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "passed", "value", "tolerance"],
                "properties": {
                    "name": {"type": "string"},
                    "passed": {"type": "boolean"},
                    "value": {},
                    "tolerance": {},
                    "seconds": _NUM,
                },
            },
        },
    },
}

SCHEMAS = {"dims": DIMS_SIDECAR, "records": RECORDS, "validation": VALIDATION_REPORT}
