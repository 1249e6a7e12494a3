import pathlib

import pytest
import yaml

import mirrorflow.validate as validate


DEFAULT_EXPERIMENT_DIR = pathlib.Path(validate.__file__).parent / "default_experiments"


def _fields(errors, level=validate.ErrorLevel.ERROR):
    return [err.field for err in errors if err.error_level >= level]


@pytest.mark.parametrize(
    "filepath", sorted(DEFAULT_EXPERIMENT_DIR.glob("*.yaml")), ids=lambda path: path.stem  # fmt: skip
)
def test_default_experiments_have_no_errors(filepath):
    with open(filepath, "r", encoding="utf-8") as file:
        experiment_document = yaml.safe_load(file)
    assert validate.validate_document_entry_types(experiment_document) == []
    errors = validate.validate_experiment_content(experiment_document)
    assert _fields(errors, validate.ErrorLevel.WARNING) == []


def test_content_errors_from_all_validators_are_collected():
    experiment_document = {
        "NOT A MAIN SECTION": {},
        "integrator": {"dt": 2.0, "horizon": 1.0},
        "regularizer": {"kind": "von_neumann"},
    }
    errors = validate.validate_experiment_content(experiment_document)
    fields = [err.field for err in errors]
    assert ("NOT A MAIN SECTION",) in fields
    assert ("integrator", "dt") in fields
    assert ("regularizer", "kind") in fields
    assert ("problem",) in fields


class TestValidateTimeGrid:
    def test_defaults_are_valid(self):
        assert validate.validate_time_grid({}) == []

    def test_step_larger_than_the_horizon_names_dt(self):
        errors = validate.validate_time_grid({"integrator": {"dt": 2.0, "horizon": 1.0}})  # fmt: skip
        assert _fields(errors) == [("integrator", "dt")]
        assert errors[0].error_type == validate.ValidationErrorType.INVALID_VALUE

    @pytest.mark.parametrize("name", ["dt", "horizon"])
    def test_nonpositive_values_are_reported(self, name):
        errors = validate.validate_time_grid({"integrator": {name: 0.0}})
        assert _fields(errors) == [("integrator", name)]

    def test_logging_interval_longer_than_the_horizon(self):
        document = {"integrator": {"dt": 0.1, "horizon": 1.0, "log_stride": 100}}
        errors = validate.validate_time_grid(document)
        assert _fields(errors) == [("integrator", "log_stride")]

    def test_stride_below_one_is_reported(self):
        errors = validate.validate_time_grid({"integrator": {"log_stride": 0}})
        assert _fields(errors) == [("integrator", "log_stride")]


class TestValidateRegularizerPairing:
    @pytest.mark.parametrize(
        "regularizer, region",
        [
            ("euclidean", "box"),
            ("entropic", "simplex"),
            ("entropic", "product"),
            ("von_neumann", "spectrahedron"),
        ],
    )
    def test_supported_pairings(self, regularizer, region):
        document = {"regularizer": {"kind": regularizer}, "region": {"kind": region}}
        assert validate.validate_regularizer_pairing(document) == []

    @pytest.mark.parametrize(
        "regularizer, region",
        [("von_neumann", "box"), ("euclidean", "spectrahedron"), ("entropic", "spectrahedron")],  # fmt: skip
    )
    def test_unsupported_pairings(self, regularizer, region):
        document = {"regularizer": {"kind": regularizer}, "region": {"kind": region}}
        errors = validate.validate_regularizer_pairing(document)
        assert len(errors) == 1
        assert errors[0].error_type == validate.ValidationErrorType.UNSUPPORTED_PAIRING
        assert errors[0].field == ("regularizer", "kind")

    def test_traffic_problems_live_on_a_simplex(self):
        document = {
            "problem": {"kind": "traffic"},
            "region": {"kind": "spectrahedron"},
            "regularizer": {"kind": "entropic"},
        }
        assert validate.validate_regularizer_pairing(document) == []


class TestValidateDimensions:
    def test_center_length_must_match_the_box(self):
        document = {
            "problem": {"kind": "quadratic", "center": [0.5, 0.5]},
            "region": {"kind": "box", "dim": 3},
        }
        errors = validate.validate_dimensions(document)
        assert _fields(errors) == [("problem", "center")]
        assert errors[0].error_type == validate.ValidationErrorType.DIMENSION_MISMATCH

    def test_bound_lists_set_the_box_dimension(self):
        document = {
            "problem": {"kind": "quadratic", "center": [0.5, 0.5]},
            "region": {"kind": "box", "lower": [0.0, 0.0], "dim": 3},
        }
        assert validate.validate_dimensions(document) == []

    def test_spectrahedron_uses_the_packed_dimension(self):
        document = {
            "problem": {"kind": "linear", "cost": [1.0, 0.0, 2.0]},
            "region": {"kind": "spectrahedron", "order": 2},
        }
        assert validate.validate_dimensions(document) == []

    def test_product_sums_the_block_dimensions(self):
        document = {
            "problem": {"kind": "quadratic", "center": [0.0] * 4},
            "region": {
                "kind": "product",
                "blocks": [{"kind": "box", "dim": 2}, {"kind": "simplex", "dim": 3}],
            },
        }
        errors = validate.validate_dimensions(document)
        assert _fields(errors) == [("problem", "center")]
        assert "Expected 5 entries" in errors[0].description

    def test_constant_noise_rows_must_match(self):
        document = {
            "region": {"kind": "box", "dim": 2},
            "noise": {"kind": "constant", "sigma": [0.1, 0.2, 0.3]},
        }
        assert _fields(validate.validate_dimensions(document)) == [("noise", "sigma")]

    def test_traffic_problems_are_not_checked(self):
        document = {"problem": {"kind": "traffic"}, "noise": {"sigma": [0.1]}}
        assert validate.validate_dimensions(document) == []


class TestValidateProblemParameters:
    def test_linear_problem_needs_a_cost(self):
        errors = validate.validate_problem_parameters({"problem": {"kind": "linear"}})
        assert _fields(errors) == [("problem", "cost")]
        assert errors[0].error_type == validate.ValidationErrorType.MISSING_PARAMETER

    def test_path_correlated_noise_needs_a_traffic_problem(self):
        document = {"problem": {"kind": "quadratic"}, "noise": {"kind": "path_correlated"}}  # fmt: skip
        errors = validate.validate_problem_parameters(document)
        assert _fields(errors) == [("noise", "kind")]

    def test_traffic_problem_with_path_correlated_noise(self):
        document = {"problem": {"kind": "traffic"}, "noise": {"kind": "path_correlated"}}  # fmt: skip
        assert validate.validate_problem_parameters(document) == []
