import copy

import pytest

from src.validator import ConfigInvalid, ConfigValidator, ErrorType, TraceNotOne, config_error


def scenario_record(**overrides):
    record = {
        "schema_version": 1,
        "name": "unit",
        "grid": {
            "x": {"lo": -8.0, "hi": 8.0, "points": 64},
            "y": {"lo": -8.0, "hi": 8.0, "points": 64},
        },
        "blocks": [{
            "weight": 1.0,
            "density_x": {"kind": "gaussian", "mean": 0.0, "variance": 1.0},
            "density_y": {"kind": "gaussian", "mean": 0.0, "variance": 2.0},
            "family_x": {"name": "constant", "params": {"dim": 1}},
            "family_y": {"name": "constant", "params": {"dim": 1}},
        }],
        "checks": [{"name": "epi", "params": {}}],
        "tolerances": {},
    }
    record.update(overrides)
    return record


@pytest.fixture
def validator():
    return ConfigValidator(min_points=16)


def error_types(result):
    return {e.error_type for e in result.errors}


def test_valid_scenario(validator):
    record = scenario_record()
    result = validator.validate_scenario(record)
    assert result.is_valid
    assert result.valid_records == [record]


def test_missing_required_field(validator):
    record = scenario_record()
    del record["checks"]
    result = validator.validate_scenario(record)
    assert not result.is_valid
    assert result.errors[0].error_type == ErrorType.NULL_VALUE
    assert result.errors[0].error_field == "checks"


def test_wrong_schema_version(validator):
    result = validator.validate_scenario(scenario_record(schema_version=2))
    assert error_types(result) == {ErrorType.CONFIG_INVALID}


def test_grid_too_coarse(validator):
    record = scenario_record()
    record["grid"]["x"]["points"] = 8
    result = validator.validate_scenario(record)
    assert ErrorType.GRID_TOO_COARSE in error_types(result)
    assert result.errors[0].error_field == "grid.x.points"


def test_inverted_axis(validator):
    record = scenario_record()
    record["grid"]["y"] = {"lo": 1.0, "hi": -1.0, "points": 32}
    result = validator.validate_scenario(record)
    assert ErrorType.OUT_OF_RANGE in error_types(result)


def test_nonpositive_variance(validator):
    record = scenario_record()
    record["blocks"][0]["density_x"]["variance"] = 0.0
    result = validator.validate_scenario(record)
    assert result.errors[0].error_field == "blocks[0].density_x.variance"


def test_unknown_family(validator):
    record = scenario_record()
    record["blocks"][0]["family_y"] = {"name": "qutrit_magic", "params": {}}
    result = validator.validate_scenario(record)
    assert error_types(result) == {ErrorType.UNKNOWN_FAMILY}


def test_block_weights_must_sum_to_one(validator):
    record = scenario_record()
    second = copy.deepcopy(record["blocks"][0])
    record["blocks"][0]["weight"] = 0.5
    second["weight"] = 0.4
    record["blocks"].append(second)
    result = validator.validate_scenario(record)
    assert error_types(result) == {ErrorType.NOT_A_PROBABILITY_TABLE}


def test_mixture_needs_matching_components(validator):
    record = scenario_record()
    record["blocks"][0]["density_x"] = {
        "kind": "mixture",
        "weights": [0.5, 0.5],
        "components": [{"kind": "gaussian", "mean": 0.0, "variance": 1.0}],
    }
    result = validator.validate_scenario(record)
    assert error_types(result) == {ErrorType.DIMENSION_MISMATCH}


def test_lambda_out_of_range(validator):
    record = scenario_record(checks=[{"name": "linear_epi", "params": {"lambdas": [0.5, 1.5]}}])
    result = validator.validate_scenario(record)
    assert result.errors[0].error_field == "checks[0].params.lambdas"


def test_unknown_check(validator):
    result = validator.validate_scenario(scenario_record(checks=[{"name": "brunn_minkowski"}]))
    assert error_types(result) == {ErrorType.INVALID_PARAMETERS}


def test_unknown_tolerance(validator):
    result = validator.validate_scenario(scenario_record(tolerances={"made_up": 1e-3}))
    assert result.errors[0].error_field == "tolerances.made_up"


def test_suite_replaces_blocks(validator):
    record = scenario_record(suite={"draws": 3})
    del record["blocks"]
    assert validator.validate_scenario(record).is_valid


def test_negative_seed(validator):
    result = validator.validate_scenario(scenario_record(seed=-1))
    assert result.errors[0].error_field == "seed"


def test_errors_do_not_leak_between_runs(validator):
    validator.validate_scenario(scenario_record(seed=-1))
    assert validator.validate_scenario(scenario_record()).is_valid


def test_config_invalid_collects_problems(validator):
    result = validator.validate_scenario(scenario_record(seed=-1))
    error = ConfigInvalid(result.errors)
    assert error.error_type == ErrorType.CONFIG_INVALID
    assert error.field == "seed"
    assert "1 problem(s)" in str(error)


def test_config_error_helper():
    error = config_error("t_grid", "sweep needs at least one time")
    assert isinstance(error, ConfigInvalid)
    assert error.to_dict()["field"] == "t_grid"


def test_error_to_dict():
    error = TraceNotOne("bad trace", field="entries", raw_value=0.2)
    assert error.to_dict() == {
        "error_type": "TRACE_NOT_ONE",
        "field": "entries",
        "message": "bad trace",
        "raw_value": "0.2",
    }
