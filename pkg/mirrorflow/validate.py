"""Module for validation of experiment definitions and their YAML file representation.

Main API functions:
- validate_experiment_file_integrity(filepath: str)
- validate_document_entry_types(experiment_document: dict)
- validate_experiment_content(experiment_document: dict)
"""

from __future__ import annotations
from dataclasses import dataclass
from enum import Enum, IntEnum
import logging
from typing import Any, Iterator, Optional

import cerberus  # type: ignore
import yaml

from mirrorflow.schemas import EXPERIMENT_SCHEMA, SECTION_SCHEMAS


class MainSections(Enum):
    PROBLEM = "problem"
    REGION = "region"
    REGULARIZER = "regularizer"
    NOISE = "noise"
    SCHEDULE = "schedule"
    INTEGRATOR = "integrator"
    ENSEMBLE = "ensemble"
    OUTPUT = "output"
    DIAGNOSTICS = "diagnostics"
    DERIVED = "derived"


SUPPORTED_PAIRINGS = {
    "euclidean": {"box", "simplex", "product"},
    "entropic": {"box", "simplex", "product"},
    "von_neumann": {"spectrahedron"},
}


class ErrorLevel(IntEnum):
    INFO = logging.INFO
    WARNING = logging.WARNING
    ERROR = logging.ERROR
    CRITICAL = logging.CRITICAL


class ValidationErrorType(Enum):
    UNKNOWN_PARAMETER = "unknown parameter"
    MISSING_PARAMETER = "missing parameter"
    INVALID_VALUE = "invalid value"
    DIMENSION_MISMATCH = "dimension mismatch"
    UNSUPPORTED_PAIRING = "unsupported pairing"
    TYPE_ERROR = "type error"
    FILE_ERROR = "file error"


@dataclass
class ValidationError:
    error_type: ValidationErrorType
    error_level: ErrorLevel
    field: tuple[str, ...]
    description: str

    def __post_init__(self):
        if isinstance(self.field, str):
            raise TypeError("'field' must be a tuple of strings")

    @property
    def message(self) -> str:
        field_string = ".".join([str(f) for f in self.field])
        return f"[{self.error_level.name}] {field_string}: {self.description}"

    def __repr__(self) -> str:
        return self.message


# MAIN API FUNCTIONS
def validate_experiment_file_integrity(filepath: str) -> list[ValidationError]:
    """Validate the integrity of an experiment YAML file.

    All reported errors are of level CRITICAL, since a YAML file containing integrity
    errors cannot be imported as an `ExperimentConfig`.

    Args:
        filepath: The path to a YAML file.

    Returns:
        A list of `ValidationError`s of type FILE_ERROR or TYPE_ERROR and level
        CRITICAL. If the list is empty, the file can be loaded and its root is a
        dictionary.
    """
    if errors := validate_experiment_file_loading(filepath):
        return errors

    with open(filepath, "r", encoding="utf-8") as file:
        experiment_document = yaml.safe_load(file)
    if errors := validate_experiment_document_root_type(experiment_document):
        return errors

    return []


def validate_document_entry_types(experiment_document: dict) -> list[ValidationError]:
    """Check if the types of the values in the YAML document are correct.

    All reported type errors are of level CRITICAL, since an experiment containing type
    errors cannot be resolved into simulation components.

    Args:
        experiment_document: A dictionary representation of an `ExperimentConfig`.

    Returns:
        A list of `ValidationError`s of type TYPE_ERROR and level CRITICAL. Each entry
        corresponds to a value in the YAML document that has an incorrect type or lies
        outside of its allowed range.
    """
    validator = cerberus.Validator()
    validator.allow_unknown = True
    validator.require_all = False
    validator.validate(experiment_document, EXPERIMENT_SCHEMA)

    errors = []
    for field, description in _flatten_cerberus_errors(validator.errors):
        error = ValidationError(
            ValidationErrorType.TYPE_ERROR, ErrorLevel.CRITICAL, field, description
        )
        errors.append(error)
    return errors


def validate_experiment_content(experiment_document: dict) -> list[ValidationError]:
    """Validate the content of an experiment document.

    Reported `ValidationError`s are of level INFO, WARNING or ERROR. INFO level errors
    only report defaults that will be used, WARNING level errors report entries that are
    ignored, and ERROR level errors report content that makes the experiment fail to
    resolve.

    Args:
        experiment_document: A dictionary representation of an `ExperimentConfig`.

    Returns:
        A list of `ValidationError`s. If the list is empty, no problems were found.
    """
    error_lists = [
        validate_expected_main_sections(experiment_document),
        validate_unexpected_main_sections(experiment_document),
        validate_unexpected_section_parameters(experiment_document),
        validate_time_grid(experiment_document),
        validate_regularizer_pairing(experiment_document),
        validate_dimensions(experiment_document),
        validate_problem_parameters(experiment_document),
    ]
    errors = [item for error_list in error_lists for item in error_list]
    return errors


# YAML INTEGRITY VALIDATION
def validate_experiment_file_loading(filepath: str) -> list[ValidationError]:
    """Check if the specified filepath can be loaded as a YAML file."""
    try:
        with open(filepath, "r", encoding="utf-8") as file:
            _ = yaml.safe_load(file)
    except yaml.YAMLError:
        description = f"invalid syntax, cannot parse file '{filepath}'"
        error = ValidationError(
            ValidationErrorType.FILE_ERROR,
            ErrorLevel.CRITICAL,
            ("yaml file",),
            description,
        )
        return [error]
    return []


def validate_experiment_document_root_type(
    experiment_document: dict | Any,
) -> list[ValidationError]:
    """Check if the root of the YAML document is a dictionary."""
    if not isinstance(experiment_document, dict):
        field = ("root",)
        description = (
            f"The YAML document must be a dictionary at its root, not a "
            f"'{type(experiment_document).__name__}'"
        )
        error = ValidationError(
            ValidationErrorType.TYPE_ERROR, ErrorLevel.CRITICAL, field, description
        )
        return [error]
    return []


# VALIDATE WHICH MAIN SECTIONS ARE PRESENT
def validate_expected_main_sections(experiment_document: dict) -> list[ValidationError]:
    """Report main sections that are missing and will use default values."""
    errors = []
    for main_section in SECTION_SCHEMAS:
        if main_section not in experiment_document:
            error = ValidationError(
                ValidationErrorType.MISSING_PARAMETER,
                ErrorLevel.INFO,
                (main_section,),
                "Main section missing, falling back to default values",
            )
            errors.append(error)
    return errors


def validate_unexpected_main_sections(
    experiment_document: dict,
) -> list[ValidationError]:
    """Check if only allowed main sections are present."""
    errors = []
    for main_section in experiment_document:
        if main_section not in [e.value for e in MainSections]:
            error = ValidationError(
                ValidationErrorType.UNKNOWN_PARAMETER,
                ErrorLevel.WARNING,
                (main_section,),
                "Unexpected main section",
            )
            errors.append(error)
    return errors


def validate_unexpected_section_parameters(
    experiment_document: dict,
) -> list[ValidationError]:
    """Check if all section parameters are known; unknown parameters are ignored."""
    errors = []
    for main_section, schema in SECTION_SCHEMAS.items():
        section = experiment_document.get(main_section) or {}
        for field_name in section:
            if field_name not in schema:
                error = ValidationError(
                    ValidationErrorType.UNKNOWN_PARAMETER,
                    ErrorLevel.WARNING,
                    (main_section, field_name),
                    "Unknown parameter",
                )
                errors.append(error)
    return errors


# CONTENT VALIDATION
def validate_time_grid(experiment_document: dict) -> list[ValidationError]:
    """Check that the time step and logging stride fit into the horizon."""
    section = _section_values(experiment_document, MainSections.INTEGRATOR.value)
    dt, horizon, stride = section["dt"], section["horizon"], section["log_stride"]
    errors = []
    for name in ["dt", "horizon"]:
        if section[name] <= 0:
            errors.append(_content_error(("integrator", name), "must be positive"))
    if stride < 1:
        field = ("integrator", "log_stride")
        errors.append(_content_error(field, "must be at least 1"))
    if errors:
        return errors

    if dt > horizon:
        description = f"step {dt} exceeds the horizon {horizon}"
        errors.append(_content_error(("integrator", "dt"), description))
    elif stride * dt > horizon:
        errors.append(
            _content_error(
                ("integrator", "log_stride"), "logging interval exceeds the horizon"
            )
        )
    return errors


def validate_regularizer_pairing(experiment_document: dict) -> list[ValidationError]:
    """Check that the regularizer is defined on the feasible region."""
    regularizer = _section_values(experiment_document, "regularizer")["kind"]
    region_kind = _effective_region_kind(experiment_document)
    if region_kind in SUPPORTED_PAIRINGS.get(regularizer, set()):
        return []
    error = ValidationError(
        ValidationErrorType.UNSUPPORTED_PAIRING,
        ErrorLevel.ERROR,
        ("regularizer", "kind"),
        f"The {regularizer} regularizer is not supported on a {region_kind} region",
    )
    return [error]


def validate_dimensions(experiment_document: dict) -> list[ValidationError]:
    """Check that problem and noise dimensions agree with the region dimension."""
    problem = _section_values(experiment_document, "problem")
    if problem["kind"] == "traffic":
        return []
    region_dim = _region_dimension(_section_values(experiment_document, "region"))
    if region_dim is None:
        return []

    errors = []
    problem_vector = {"quadratic": "center", "linear": "cost"}.get(problem["kind"])
    vector = problem[problem_vector] if problem_vector is not None else None
    if vector is not None and len(vector) != region_dim:
        errors.append(
            ValidationError(
                ValidationErrorType.DIMENSION_MISMATCH,
                ErrorLevel.ERROR,
                ("problem", problem_vector),
                f"Expected {region_dim} entries, found {len(vector)}",
            )
        )

    noise = _section_values(experiment_document, "noise")
    sigma = noise["sigma"]
    sigma_rows = len(sigma) if isinstance(sigma, list) else region_dim
    if noise["kind"] == "constant" and sigma_rows != region_dim:
        errors.append(
            ValidationError(
                ValidationErrorType.DIMENSION_MISMATCH,
                ErrorLevel.ERROR,
                ("noise", "sigma"),
                f"Expected {region_dim} rows, found {len(sigma)}",
            )
        )
    return errors


def validate_problem_parameters(experiment_document: dict) -> list[ValidationError]:
    """Check parameters that a problem or noise kind requires."""
    problem = _section_values(experiment_document, "problem")
    noise = _section_values(experiment_document, "noise")
    errors = []
    if problem["kind"] == "linear" and problem["cost"] is None:
        errors.append(
            ValidationError(
                ValidationErrorType.MISSING_PARAMETER,
                ErrorLevel.ERROR,
                ("problem", "cost"),
                "A linear problem needs a cost vector",
            )
        )
    if noise["kind"] == "path_correlated" and problem["kind"] != "traffic":
        errors.append(
            _content_error(
                ("noise", "kind"), "path correlated noise needs a traffic problem"
            )
        )
    return errors


def _content_error(field: tuple[str, ...], description: str) -> ValidationError:
    return ValidationError(
        ValidationErrorType.INVALID_VALUE, ErrorLevel.ERROR, field, description
    )


def _section_values(experiment_document: dict, main_section: str) -> dict:
    """Return the section parameters with schema defaults for missing entries."""
    section = experiment_document.get(main_section) or {}
    schema = SECTION_SCHEMAS[main_section]
    return {
        key: section.get(key, rules.get("default")) for key, rules in schema.items()
    }


def _effective_region_kind(experiment_document: dict) -> str:
    if _section_values(experiment_document, "problem")["kind"] == "traffic":
        return "simplex"
    return _section_values(experiment_document, "region")["kind"]


def _region_dimension(region: dict) -> Optional[int]:
    kind = region["kind"]
    if kind == "box":
        for bound in (region["lower"], region["upper"]):
            if isinstance(bound, list):
                return len(bound)
        return region["dim"]
    if kind == "simplex":
        return region["dim"]
    if kind == "spectrahedron":
        return region["order"] * (region["order"] + 1) // 2
    dims = []
    for block in region["blocks"]:
        block_values = {
            key: block.get(key, rules.get("default"))
            for key, rules in SECTION_SCHEMAS["region"].items()
        }
        if block_values["kind"] == "product":
            return None
        dims.append(_region_dimension(block_values))
    return sum(dims) if all(dim is not None for dim in dims) else None


def _flatten_cerberus_errors(errors: dict, field: tuple = ()) -> Iterator[tuple]:
    """Yield (field, message) pairs from the nested error dictionary of cerberus.

    The field is the tuple of keys, or list indices, leading to the offending entry.
    """
    for key, value in errors.items():
        path = field + (key,)
        entries = value if isinstance(value, list) else [value]
        for entry in entries:
            if isinstance(entry, dict):
                yield from _flatten_cerberus_errors(entry, path)
            else:
                yield path, entry
