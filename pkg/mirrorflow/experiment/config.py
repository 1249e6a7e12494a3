"""Module for storing, loading and saving experiment definitions.

The `ExperimentConfig` class is a Python representation of a YAML experiment file. Each
main section of the file is held by a `ConfigSection`, which validates the section
parameters against its cerberus schema and falls back to the schema defaults for
parameters that are not specified.
"""

from __future__ import annotations
from collections import UserDict
from copy import deepcopy
from typing import Any, Optional

import cerberus  # type: ignore
import yaml

from mirrorflow.schemas import SECTION_SCHEMAS
from mirrorflow.validate import (
    validate_document_entry_types,
    validate_experiment_file_integrity,
)


class ConfigSection(UserDict):
    """Container for the parameters of one main section of an experiment."""

    def __init__(self, name: str, data: Optional[dict] = None):
        if name not in SECTION_SCHEMAS:
            raise KeyError(f"Unknown experiment section: {name}")
        self.name = name
        self._schema = SECTION_SCHEMAS[name]
        self._validator = cerberus.Validator(require_all=False, allow_unknown=False)

        data = {} if data is None else data
        parameters = {key: value for key, value in data.items() if key in self._schema}
        if not self._validator.validate(parameters, self._schema):
            raise TypeError(f"Invalid {name} parameters: {self._validator.errors}")

        self.data: dict = parameters

    def __getitem__(self, key: str) -> Any:
        if key not in self._schema:
            raise KeyError(f"Invalid {self.name} parameter: {key}")

        if key in self.data:
            return self.data[key]
        else:
            return deepcopy(self._schema[key]["default"])

    def __repr__(self):
        length = max([len(key) for key in self._schema])

        output = []
        for parameter in self._schema:
            value = _format_value(self[parameter], quote_char='"')
            if parameter not in self.data:
                value = f"{value} (default)"
            output.append(f"{parameter:<{length}} : {value}")
        return "\n".join(output)

    @property
    def schema(self):
        return deepcopy(self._schema)

    def to_dict(self) -> dict:
        """Return a copy of the specified parameters as a dictionary."""
        return deepcopy(self.data)

    def resolved(self) -> dict:
        """Return all parameters of the section, with defaults filled in."""
        return {key: self[key] for key in self._schema}


class ExperimentConfig:
    """Representation of an experiment definition.

    Attributes:
        sections: A mapping from main section names to `ConfigSection`s, containing
            one entry for every section in `SECTION_SCHEMAS`.
    """

    sections: dict[str, ConfigSection]

    def __init__(self, **sections: Optional[dict]):
        """Initialize an ExperimentConfig.

        Args:
            **sections: One dictionary of parameters per main section, for example
                `problem={"kind": "quadratic", "center": [0.5, 0.5]}`. Missing sections
                use the default values of all their parameters.
        """
        unknown = set(sections) - set(SECTION_SCHEMAS)
        if unknown:
            names = ", ".join(sorted(unknown))
            raise ValueError(f"unknown experiment sections: {names}")
        document = {
            name: {} if sections.get(name) is None else sections[name]
            for name in SECTION_SCHEMAS
        }
        if errors := validate_document_entry_types(document):
            error_message = "\n".join([error.message for error in errors])
            raise ValueError(f"invalid experiment parameters\n{error_message}")

        self.sections = {
            name: ConfigSection(name, data) for name, data in document.items()
        }

    def __getitem__(self, name: str) -> ConfigSection:
        return self.sections[name]

    def __repr__(self):
        problem = self.sections["problem"]["kind"]
        region = self.sections["region"]["kind"]
        regularizer = self.sections["regularizer"]["kind"]
        return (
            f"ExperimentConfig(problem={problem}, region={region}, "
            f"regularizer={regularizer})"
        )

    def to_dict(self) -> dict[str, dict]:
        """Return a dictionary representation of the specified parameters."""
        return {name: section.to_dict() for name, section in self.sections.items()}

    def resolved(self) -> dict[str, dict]:
        """Return a dictionary of all parameters, with defaults filled in."""
        return {name: section.resolved() for name, section in self.sections.items()}

    def with_overrides(
        self,
        seed: Optional[int] = None,
        directory: Optional[str] = None,
        threads: Optional[int] = None,
    ) -> ExperimentConfig:
        """Return a copy with new ensemble seed, output directory or thread count."""
        document = self.to_dict()
        if seed is not None:
            document["ensemble"]["seed"] = seed
        if threads is not None:
            document["ensemble"]["threads"] = threads
        if directory is not None:
            document["output"]["directory"] = directory
        return self.from_dict(document)

    @classmethod
    def from_dict(cls, experiment_document: dict) -> ExperimentConfig:
        """Create an `ExperimentConfig` from a dictionary.

        Entries that are not main sections, such as the echoed "derived" section, are
        ignored.
        """
        return cls(
            **{
                name: experiment_document.get(name) or {}
                for name in SECTION_SCHEMAS
            }
        )

    @classmethod
    def load(cls, filepath) -> ExperimentConfig:
        """Load an experiment YAML file and return an `ExperimentConfig` instance."""
        if errors := validate_experiment_file_integrity(filepath):
            error_message = "\n".join([error.description for error in errors])
            raise ValueError(f"error loading YAML file\n{error_message}")
        with open(filepath, "r", encoding="utf-8") as file:
            experiment_data = yaml.safe_load(file)
        return cls.from_dict(experiment_data)

    def save(self, filepath) -> None:
        """Save the specified parameters of the `ExperimentConfig` to a YAML file."""
        dump_yaml(self.to_dict(), filepath)


def dump_yaml(document: dict, filepath) -> None:
    """Write a document to a YAML file, preserving the key order."""
    with open(filepath, "w", encoding="utf-8") as file:
        yaml.dump(
            document,
            file,
            version=(1, 2),
            sort_keys=False,
            Dumper=IndentDumper,
        )


class IndentDumper(yaml.SafeDumper):
    """Custom YAML dumper to preserve indentation."""

    def increase_indent(self, flow=False, indentless=False):
        return super(IndentDumper, self).increase_indent(flow, False)


def _format_value(value, quote_char):
    if isinstance(value, str):
        return f"{quote_char}{value}{quote_char}"
    else:
        return str(value)
