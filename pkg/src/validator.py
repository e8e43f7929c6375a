from typing import List, Dict, Optional, Any
from dataclasses import dataclass, field
from enum import Enum

from .config import SCHEMA_VERSION


class ErrorType(Enum):
    NULL_VALUE = "NULL_VALUE"
    INVALID_DATA_TYPE = "INVALID_DATA_TYPE"
    OUT_OF_RANGE = "OUT_OF_RANGE"
    NOT_HERMITIAN = "NOT_HERMITIAN"
    NOT_POSITIVE = "NOT_POSITIVE"
    TRACE_NOT_ONE = "TRACE_NOT_ONE"
    DIMENSION_MISMATCH = "DIMENSION_MISMATCH"
    COVARIANCE_NOT_SPD = "COVARIANCE_NOT_SPD"
    GRID_TOO_COARSE = "GRID_TOO_COARSE"
    UNKNOWN_FAMILY = "UNKNOWN_FAMILY"
    INVALID_PARAMETERS = "INVALID_PARAMETERS"
    NOT_A_PROBABILITY_TABLE = "NOT_A_PROBABILITY_TABLE"
    INCOMPATIBLE_GRIDS = "INCOMPATIBLE_GRIDS"
    NOT_CONDITIONALLY_INDEPENDENT = "NOT_CONDITIONALLY_INDEPENDENT"
    FISHER_INCONCLUSIVE = "FISHER_INCONCLUSIVE"
    SCHEDULE_TOO_COARSE = "SCHEDULE_TOO_COARSE"
    GRID_BUDGET_EXCEEDED = "GRID_BUDGET_EXCEEDED"
    CONFIG_INVALID = "CONFIG_INVALID"


class EpiqError(Exception):
    error_type: ErrorType = ErrorType.INVALID_PARAMETERS

    def __init__(self, message: str, field: str = None, raw_value: Any = None):
        super().__init__(message)
        self.message = message
        self.field = field
        self.raw_value = raw_value

    def to_dict(self) -> Dict:
        return {
            "error_type": self.error_type.value,
            "field": self.field,
            "message": self.message,
            "raw_value": None if self.raw_value is None else str(self.raw_value),
        }


class NotHermitian(EpiqError):
    error_type = ErrorType.NOT_HERMITIAN


class NotPositive(EpiqError):
    error_type = ErrorType.NOT_POSITIVE


class TraceNotOne(EpiqError):
    error_type = ErrorType.TRACE_NOT_ONE


class DimensionMismatch(EpiqError):
    error_type = ErrorType.DIMENSION_MISMATCH


class CovarianceNotSPD(EpiqError):
    error_type = ErrorType.COVARIANCE_NOT_SPD


class GridTooCoarse(EpiqError):
    error_type = ErrorType.GRID_TOO_COARSE


class UnknownFamily(EpiqError):
    error_type = ErrorType.UNKNOWN_FAMILY


class InvalidParameters(EpiqError):
    error_type = ErrorType.INVALID_PARAMETERS


class NotAProbabilityTable(EpiqError):
    error_type = ErrorType.NOT_A_PROBABILITY_TABLE


class IncompatibleGrids(EpiqError):
    error_type = ErrorType.INCOMPATIBLE_GRIDS


class NotConditionallyIndependent(EpiqError):
    error_type = ErrorType.NOT_CONDITIONALLY_INDEPENDENT


class FisherInconclusive(EpiqError):
    """Fisher estimates cannot settle the inequality; ``report`` carries the verdict when one was formed."""
    error_type = ErrorType.FISHER_INCONCLUSIVE

    def __init__(self, message: str, field: str = None, raw_value: Any = None, report: Any = None):
        super().__init__(message, field, raw_value)
        self.report = report


class ScheduleTooCoarse(EpiqError):
    error_type = ErrorType.SCHEDULE_TOO_COARSE


class GridBudgetExceeded(EpiqError):
    error_type = ErrorType.GRID_BUDGET_EXCEEDED


class ConfigInvalid(EpiqError):
    error_type = ErrorType.CONFIG_INVALID

    def __init__(self, errors: List["ValidationError"]):
        details = "; ".join(f"{e.error_field}: {e.error_message}" for e in errors)
        first = errors[0] if errors else None
        super().__init__(
            f"Invalid scenario config ({len(errors)} problem(s)): {details}",
            field=first.error_field if first else None,
            raw_value=first.raw_value if first else None,
        )
        self.errors = errors


@dataclass
class ValidationError:
    record_data: Dict
    error_type: ErrorType
    error_field: str
    error_message: str
    raw_value: Any = None


@dataclass
class ValidationResult:
    valid_records: List[Dict] = field(default_factory=list)
    errors: List[ValidationError] = field(default_factory=list)

    @property
    def is_valid(self) -> bool:
        return not self.errors


class ConfigValidator:
    DENSITY_KINDS = {'gaussian', 'uniform', 'mixture', 'point'}
    STATE_FAMILIES = {'constant', 'diagonal_classical', 'qubit_bloch'}
    CHECK_NAMES = {
        'epi', 'linear_epi', 'stam', 'linear_stam',
        'mi_chain', 'concavity', 'asymptotic', 'phi',
    }
    TOLERANCE_FIELDS = {'ci', 'entropic', 'fisher_relative', 'concavity', 'chain', 'slope', 'asymptotic'}

    REQUIRED_FIELDS_SCENARIO = ['schema_version', 'name', 'checks']
    REQUIRED_FIELDS_AXIS = ['lo', 'hi', 'points']
    REQUIRED_FIELDS_BLOCK = ['weight', 'density_x', 'density_y', 'family_x', 'family_y']
    REQUIRED_FIELDS_CHECK = ['name']

    def __init__(self, min_points: int = 16):
        self.min_points = min_points
        self.errors: List[ValidationError] = []

    def _add_error(
            self,
            record: Dict,
            error_type: ErrorType,
            field: str,
            message: str,
            raw_value: Any = None
    ):
        self.errors.append(ValidationError(
            record_data=dict(record) if isinstance(record, dict) else {"value": record},
            error_type=error_type,
            error_field=field,
            error_message=message,
            raw_value=str(raw_value) if raw_value is not None else None
        ))

    def _check_nulls(self, record: Dict, required_fields: List[str], path: str) -> bool:
        if not isinstance(record, dict):
            self._add_error({}, ErrorType.INVALID_DATA_TYPE, path, "expected an object", record)
            return False
        for name in required_fields:
            value = record.get(name)
            if value is None or (isinstance(value, str) and value.strip() == ''):
                self._add_error(
                    record,
                    ErrorType.NULL_VALUE,
                    f"{path}.{name}" if path else name,
                    f"field '{name}' is missing or empty",
                    value
                )
                return False
        return True

    def _check_numeric(self, record: Dict, name: str, path: str) -> Optional[float]:
        value = record.get(name)
        try:
            number = float(value)
        except (TypeError, ValueError):
            self._add_error(record, ErrorType.INVALID_DATA_TYPE, f"{path}.{name}",
                            f"field '{name}' must be a number", value)
            return None
        if number != number or number in (float('inf'), float('-inf')):
            self._add_error(record, ErrorType.OUT_OF_RANGE, f"{path}.{name}",
                            f"field '{name}' must be finite", value)
            return None
        return number

    def _check_positive(self, record: Dict, name: str, path: str) -> bool:
        number = self._check_numeric(record, name, path)
        if number is None:
            return False
        if number <= 0:
            self._add_error(record, ErrorType.OUT_OF_RANGE, f"{path}.{name}",
                            f"field '{name}' must be > 0", number)
            return False
        return True

    def _check_unit_interval(self, record: Dict, name: str, path: str) -> bool:
        number = self._check_numeric(record, name, path)
        if number is None:
            return False
        if not (0.0 <= number <= 1.0):
            self._add_error(record, ErrorType.OUT_OF_RANGE, f"{path}.{name}",
                            f"field '{name}' must lie in [0, 1]", number)
            return False
        return True

    def _check_probability_vector(self, record: Dict, name: str, path: str) -> bool:
        values = record.get(name)
        if not isinstance(values, list) or not values:
            self._add_error(record, ErrorType.INVALID_DATA_TYPE, f"{path}.{name}",
                            f"field '{name}' must be a non-empty list", values)
            return False
        try:
            numbers = [float(v) for v in values]
        except (TypeError, ValueError):
            self._add_error(record, ErrorType.INVALID_DATA_TYPE, f"{path}.{name}",
                            "probabilities must be numbers", values)
            return False
        if any(v < 0 for v in numbers) or abs(sum(numbers) - 1.0) > 1e-9:
            self._add_error(record, ErrorType.NOT_A_PROBABILITY_TABLE, f"{path}.{name}",
                            "probabilities must be nonnegative and sum to 1", values)
            return False
        return True

    def validate_axis(self, record: Dict, path: str) -> bool:
        if not self._check_nulls(record, self.REQUIRED_FIELDS_AXIS, path):
            return False
        lo = self._check_numeric(record, 'lo', path)
        hi = self._check_numeric(record, 'hi', path)
        if lo is None or hi is None:
            return False
        if hi <= lo:
            self._add_error(record, ErrorType.OUT_OF_RANGE, f"{path}.hi",
                            "upper bound must exceed lower bound", hi)
            return False
        points = record.get('points')
        if not isinstance(points, int) or isinstance(points, bool):
            self._add_error(record, ErrorType.INVALID_DATA_TYPE, f"{path}.points",
                            "point count must be an integer", points)
            return False
        if points < self.min_points:
            self._add_error(record, ErrorType.GRID_TOO_COARSE, f"{path}.points",
                            f"point count must be >= {self.min_points}", points)
            return False
        return True

    def validate_density(self, record: Dict, path: str) -> bool:
        if not self._check_nulls(record, ['kind'], path):
            return False
        kind = record['kind']
        if kind not in self.DENSITY_KINDS:
            self._add_error(record, ErrorType.INVALID_PARAMETERS, f"{path}.kind",
                            f"unknown density kind (allowed: {sorted(self.DENSITY_KINDS)})", kind)
            return False
        if kind == 'gaussian':
            return (self._check_numeric(record, 'mean', path) is not None
                    and self._check_positive(record, 'variance', path))
        if kind == 'uniform':
            lo = self._check_numeric(record, 'lo', path)
            hi = self._check_numeric(record, 'hi', path)
            if lo is None or hi is None:
                return False
            if hi <= lo:
                self._add_error(record, ErrorType.OUT_OF_RANGE, f"{path}.hi",
                                "uniform upper bound must exceed lower bound", hi)
                return False
            return True
        if kind == 'point':
            return self._check_numeric(record, 'at', path) is not None
        if not self._check_probability_vector(record, 'weights', path):
            return False
        components = record.get('components')
        if not isinstance(components, list) or len(components) != len(record['weights']):
            self._add_error(record, ErrorType.DIMENSION_MISMATCH, f"{path}.components",
                            "mixture needs one component per weight", components)
            return False
        return all(self.validate_density(c, f"{path}.components[{i}]")
                   for i, c in enumerate(components))

    def validate_family(self, record: Dict, path: str) -> bool:
        if not self._check_nulls(record, ['name'], path):
            return False
        name = record['name']
        if name not in self.STATE_FAMILIES:
            self._add_error(record, ErrorType.UNKNOWN_FAMILY, f"{path}.name",
                            f"unknown state family (declared: {sorted(self.STATE_FAMILIES)})", name)
            return False
        params = record.get('params') or {}
        if not isinstance(params, dict):
            self._add_error(record, ErrorType.INVALID_DATA_TYPE, f"{path}.params",
                            "params must be an object", params)
            return False
        if name == 'qubit_bloch':
            ok = all(self._check_numeric(params, key, f"{path}.params") is not None
                     for key in ('alpha', 'beta', 'gamma') if key in params)
            if 'mu' in params:
                mu = self._check_numeric(params, 'mu', f"{path}.params")
                if mu is None or not (0.0 <= mu < 1.0):
                    self._add_error(params, ErrorType.OUT_OF_RANGE, f"{path}.params.mu",
                                    "mixedness must lie in [0, 1)", params.get('mu'))
                    return False
            return ok
        if name == 'diagonal_classical':
            if 'slope' not in params and 'slopes' not in params:
                self._add_error(params, ErrorType.INVALID_PARAMETERS, f"{path}.params",
                                "diagonal_classical needs 'slope' (logistic) or 'slopes' (softmax)")
                return False
            return True
        state = params.get('state')
        if state is not None and not isinstance(state, list):
            self._add_error(params, ErrorType.INVALID_DATA_TYPE, f"{path}.params.state",
                            "constant state must be a matrix (list of rows)", state)
            return False
        return True

    def validate_block(self, record: Dict, path: str) -> bool:
        if not self._check_nulls(record, self.REQUIRED_FIELDS_BLOCK, path):
            return False
        ok = self._check_unit_interval(record, 'weight', path)
        ok = self.validate_density(record['density_x'], f"{path}.density_x") and ok
        ok = self.validate_density(record['density_y'], f"{path}.density_y") and ok
        ok = self.validate_family(record['family_x'], f"{path}.family_x") and ok
        ok = self.validate_family(record['family_y'], f"{path}.family_y") and ok
        return ok

    def validate_check(self, record: Dict, path: str) -> bool:
        if not self._check_nulls(record, self.REQUIRED_FIELDS_CHECK, path):
            return False
        if record['name'] not in self.CHECK_NAMES:
            self._add_error(record, ErrorType.INVALID_PARAMETERS, f"{path}.name",
                            f"unknown check (allowed: {sorted(self.CHECK_NAMES)})", record['name'])
            return False
        params = record.get('params') or {}
        for key in ('t_grid', 't_list', 't_values'):
            if key in params and (not isinstance(params[key], list) or not params[key]):
                self._add_error(params, ErrorType.OUT_OF_RANGE, f"{path}.params.{key}",
                                "time list must be non-empty", params[key])
                return False
        for key in ('lambda', 'lambdas'):
            values = params.get(key)
            if values is None:
                continue
            for v in (values if isinstance(values, list) else [values]):
                if not isinstance(v, (int, float)) or not (0.0 <= v <= 1.0):
                    self._add_error(params, ErrorType.OUT_OF_RANGE, f"{path}.params.{key}",
                                    "lambda must lie in [0, 1]", v)
                    return False
        return True

    def validate_tolerances(self, record: Dict, path: str = 'tolerances') -> bool:
        if not isinstance(record, dict):
            self._add_error({}, ErrorType.INVALID_DATA_TYPE, path, "expected an object", record)
            return False
        ok = True
        for name in record:
            if name not in self.TOLERANCE_FIELDS:
                self._add_error(record, ErrorType.INVALID_PARAMETERS, f"{path}.{name}",
                                f"unknown tolerance (allowed: {sorted(self.TOLERANCE_FIELDS)})", name)
                ok = False
                continue
            ok = self._check_positive(record, name, path) and ok
        return ok

    def validate_scenario(self, record: Dict) -> ValidationResult:
        self.errors = []
        valid = self._validate_scenario(record)
        return ValidationResult(
            valid_records=[record] if valid else [],
            errors=self.errors.copy()
        )

    def _validate_scenario(self, record: Dict) -> bool:
        if not self._check_nulls(record, self.REQUIRED_FIELDS_SCENARIO, ''):
            return False
        if record['schema_version'] != SCHEMA_VERSION:
            self._add_error(record, ErrorType.CONFIG_INVALID, 'schema_version',
                            f"unsupported schema version (expected {SCHEMA_VERSION})",
                            record['schema_version'])
            return False

        ok = True
        # a missing grid falls back to the configured joint grid
        grid = record.get('grid')
        if grid is not None:
            if self._check_nulls(grid, ['x', 'y'], 'grid'):
                ok = self.validate_axis(grid['x'], 'grid.x') and ok
                ok = self.validate_axis(grid['y'], 'grid.y') and ok
            else:
                ok = False

        blocks = record.get('blocks')
        suite = record.get('suite')
        if suite is None:
            if not isinstance(blocks, list) or not blocks:
                self._add_error(record, ErrorType.NULL_VALUE, 'blocks',
                                "a scenario needs either 'blocks' or 'suite'", blocks)
                ok = False
            else:
                for i, block in enumerate(blocks):
                    ok = self.validate_block(block, f"blocks[{i}]") and ok
                if ok:
                    total = sum(float(b['weight']) for b in blocks)
                    if abs(total - 1.0) > 1e-9:
                        self._add_error(record, ErrorType.NOT_A_PROBABILITY_TABLE, 'blocks',
                                        "block weights must sum to 1", total)
                        ok = False
        elif not isinstance(suite, dict) or not isinstance(suite.get('draws', 1), int) or suite.get('draws', 1) < 1:
            self._add_error(record, ErrorType.OUT_OF_RANGE, 'suite.draws',
                            "suite draws must be a positive integer", suite)
            ok = False

        checks = record['checks']
        if not isinstance(checks, list) or not checks:
            self._add_error(record, ErrorType.NULL_VALUE, 'checks', "check list must be non-empty", checks)
            ok = False
        else:
            for i, check in enumerate(checks):
                ok = self.validate_check(check, f"checks[{i}]") and ok

        if 'tolerances' in record and record['tolerances'] is not None:
            ok = self.validate_tolerances(record['tolerances']) and ok

        seed = record.get('seed')
        if seed is not None and (not isinstance(seed, int) or isinstance(seed, bool) or seed < 0):
            self._add_error(record, ErrorType.OUT_OF_RANGE, 'seed', "seed must be a nonnegative integer", seed)
            ok = False
        return ok


def config_error(field: str, message: str, raw_value: Any = None) -> ConfigInvalid:
    return ConfigInvalid([ValidationError(
        record_data={},
        error_type=ErrorType.CONFIG_INVALID,
        error_field=field,
        error_message=message,
        raw_value=None if raw_value is None else str(raw_value),
    )])
