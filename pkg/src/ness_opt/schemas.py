"""JSON schemas for run configurations and emitted reports, plus CSV layouts."""

from __future__ import annotations

import jsonschema

__all__ = [
    "SCHEMA_VERSION",
    "CONFIG_SCHEMA",
    "STEADY_REPORT_SCHEMA",
    "GRAD_REPORT_SCHEMA",
    "OPTIMIZE_REPORT_SCHEMA",
    "SENSITIVITY_COLUMNS",
    "ConfigError",
    "validate_config",
    "validate_report",
    "json_pointer",
]

SCHEMA_VERSION = 1

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}
_POS = {"type": "number", "exclusiveMinimum": 0}
_UNIT = {"type": "number", "minimum": 0, "maximum": 1}
_GAMMA = {"type": "number", "minimum": 0, "maximum": 0.0025}

HEAT_PARAM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "theta": _NONNEG,
        "theta1": _NONNEG,
        "theta2": _NONNEG,
        "J": _NONNEG,
        "gamma_H": _GAMMA,
        "gamma_C": _GAMMA,
        "gamma_D": _GAMMA,
        "a0": _UNIT,
        "a1": _UNIT,
        "b0": _UNIT,
        "b1": _UNIT,
        "T_H": _POS,
        "T_C": _POS,
        "T_D": _POS,
        "omega_c": _POS,
        "rate_factor": _POS,
    },
}

VSYSTEM_PARAM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "eps_gap": _NONNEG,
        "J": _NONNEG,
        "gamma_d": _NONNEG,
        "ln_gamma_d": _NUM,
        "Gamma": _NONNEG,
        "ln_Gamma": _NUM,
        "Gamma_RC": _NONNEG,
        "r": _NONNEG,
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema_version", "model"],
    "additionalProperties": False,
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "model": {"enum": ["heat", "vsystem"]},
        "params": {"type": "object"},
        "backend": {"enum": ["relaxation", "direct"]},
        "observable": {"type": "string"},
        "active": {"type": "array", "items": {"type": "string"}, "minItems": 1, "uniqueItems": True},
        "optimize": {
            "type": "object",
            "additionalProperties": False,
            "required": ["objective"],
            "properties": {
                "objective": {"enum": ["J_H", "R", "eta_loc"]},
                "seeds": {
                    "oneOf": [
                        {"type": "integer", "minimum": 1},
                        {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
                    ]
                },
                "master_seed": {"type": "integer", "minimum": 0},
                "max_iters": {"type": "integer", "minimum": 1},
                "target": _NUM,
                "lr": _POS,
            },
        },
        "sensitivity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "r_grid": {"type": "array", "items": _POS, "minItems": 1},
                "r_min": _POS,
                "r_max": _POS,
                "n_points": {"type": "integer", "minimum": 1},
            },
        },
    },
    "allOf": [
        {
            "if": {"properties": {"model": {"const": "heat"}}},
            "then": {"properties": {"params": HEAT_PARAM_SCHEMA}},
        },
        {
            "if": {"properties": {"model": {"const": "vsystem"}}},
            "then": {"properties": {"params": VSYSTEM_PARAM_SCHEMA}},
        },
    ],
}

_FLOAT_MAP = {"type": "object", "additionalProperties": {"type": "number"}}

_COMMON_REPORT = {
    "schema_version": {"const": SCHEMA_VERSION},
    "command": {"type": "string"},
    "model": {"enum": ["heat", "vsystem"]},
    "backend": {"enum": ["relaxation", "direct"]},
    "params": _FLOAT_MAP,
}

STEADY_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "model", "backend", "params", "state", "residual", "converged", "observables", "diagnostics"],
    "properties": {
        **_COMMON_REPORT,
        "state": {"type": "array", "items": {"type": "number"}},
        "residual": {"type": "number", "minimum": 0},
        "converged": {"type": "boolean"},
        "observables": _FLOAT_MAP,
        "diagnostics": {"type": "object"},
    },
}

GRAD_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "model", "backend", "params", "observable", "value", "gradient", "adjoint_residual", "steady_solves"],
    "properties": {
        **_COMMON_REPORT,
        "observable": {"type": "string"},
        "value": {"type": "number"},
        "gradient": _FLOAT_MAP,
        "adjoint_residual": {"type": "number", "minimum": 0},
        "steady_solves": {"type": "integer", "minimum": 0},
        "fd_check": {
            "type": "object",
            "required": ["fd_gradient", "relative_error", "max_relative_error", "passed"],
            "properties": {
                "fd_gradient": _FLOAT_MAP,
                "relative_error": _FLOAT_MAP,
                "max_relative_error": {"type": "number", "minimum": 0},
                "passed": {"type": "boolean"},
            },
        },
    },
}

OPTIMIZE_REPORT_SCHEMA = {
    "type": "object",
    "required": ["schema_version", "command", "model", "backend", "objective", "seeds", "n_succeeded", "n_target_reached"],
    "properties": {
        **_COMMON_REPORT,
        "objective": {"enum": ["J_H", "R", "eta_loc"]},
        "seeds": {"type": "array", "items": {"type": "integer"}},
        "n_succeeded": {"type": "integer", "minimum": 0},
        "n_target_reached": {"type": "integer", "minimum": 0},
    },
}

SENSITIVITY_COLUMNS = ("r", "d_p_plus_dr", "d_p_minus_dr", "d_re_coh_dr", "d_im_coh_dr", "d_trace_dr")


class ConfigError(ValueError):
    """Invalid configuration; ``pointer`` is a JSON pointer to the offending key."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer or "/"
        self.message = message


def json_pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _pointer_for(err: jsonschema.ValidationError) -> str:
    path = list(err.absolute_path)
    if err.validator == "required":
        missing = err.message.split("'")[1] if "'" in err.message else ""
        path.append(missing)
    elif err.validator == "additionalProperties" and "'" in err.message:
        path.append(err.message.split("'")[1])
    return json_pointer(path)


def validate_config(cfg) -> None:
    """Raise :class:`ConfigError` pointing at the first offending key."""
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    err = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if err is not None:
        raise ConfigError(_pointer_for(err), err.message)


def validate_report(report: dict, schema: dict) -> None:
    jsonschema.validate(report, schema)
