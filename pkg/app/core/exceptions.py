from http import HTTPStatus


class FirmError(Exception):
    def __init__(self, detail: str, status_code: int = HTTPStatus.INTERNAL_SERVER_ERROR):
        super().__init__(detail)
        self.detail = detail
        self.status_code = int(status_code)


class ScenarioFileNotFoundError(FirmError):
    def __init__(self, path: str):
        super().__init__(detail=f"Scenario file not found: {path}", status_code=HTTPStatus.NOT_FOUND)


class ScenarioSchemaError(FirmError):
    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(
            detail=f"Scenario schema violation at {location}: {message}",
            status_code=HTTPStatus.UNPROCESSABLE_ENTITY,
        )


class TraceLengthError(FirmError):
    def __init__(self, name: str, found: int, expected: int):
        super().__init__(
            detail=f"Trace '{name}' has {found} rows, expected {expected}",
            status_code=HTTPStatus.UNPROCESSABLE_ENTITY,
        )


class ScenarioValidationError(FirmError):
    def __init__(self, violations: list):
        self.violations = violations
        lines = "; ".join(f"{v.entity}: {v.message}" for v in violations)
        super().__init__(detail=f"Scenario failed validation: {lines}", status_code=HTTPStatus.UNPROCESSABLE_ENTITY)


class CandidateBoundsError(FirmError):
    def __init__(self, variable: str, value: float, lower: float, upper: float):
        self.variable = variable
        super().__init__(
            detail=f"Candidate variable '{variable}' = {value} outside bounds [{lower}, {upper}]",
            status_code=HTTPStatus.UNPROCESSABLE_ENTITY,
        )


class UnknownVariableError(FirmError):
    def __init__(self, variable: str):
        super().__init__(detail=f"Unknown decision variable '{variable}'", status_code=HTTPStatus.UNPROCESSABLE_ENTITY)


class InvalidBoundsOverrideError(FirmError):
    def __init__(self, variable: str, lower: float, upper: float):
        super().__init__(
            detail=f"Bound override for '{variable}' leaves an empty box [{lower}, {upper}]",
            status_code=HTTPStatus.BAD_REQUEST,
        )


class AnnuityError(FirmError):
    def __init__(self, lifetime: float):
        super().__init__(detail=f"Economic lifetime must be at least 1 year, got {lifetime}", status_code=HTTPStatus.BAD_REQUEST)


class DEConfigError(FirmError):
    def __init__(self, message: str):
        super().__init__(detail=f"Invalid optimizer configuration: {message}", status_code=HTTPStatus.BAD_REQUEST)


class MisalignedVectorsError(FirmError):
    def __init__(self):
        super().__init__(detail="Solution vectors are not aligned", status_code=HTTPStatus.BAD_REQUEST)


class ClusterCountError(FirmError):
    def __init__(self, k: int, n: int):
        super().__init__(detail=f"Cannot form {k} clusters from {n} vectors", status_code=HTTPStatus.BAD_REQUEST)


class AggregationError(FirmError):
    def __init__(self, message: str):
        super().__init__(detail=message, status_code=HTTPStatus.BAD_REQUEST)


class ArchiveFormatError(FirmError):
    def __init__(self, message: str):
        super().__init__(detail=f"Malformed archive: {message}", status_code=HTTPStatus.BAD_REQUEST)


class OutputDirectoryError(FirmError):
    def __init__(self, path: str):
        super().__init__(detail=f"Output directory is not writable: {path}", status_code=HTTPStatus.BAD_REQUEST)
