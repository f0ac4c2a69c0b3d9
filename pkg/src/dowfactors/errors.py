"""Exception hierarchy shared by every stage of the pipeline."""


class DowFactorsError(Exception):
    """Base class for all errors raised by this package."""


# ingest

class MalformedRow(DowFactorsError, ValueError):
    def __init__(self, row: int, field: str, value: str, reason: str = ""):
        self.row = row
        self.field = field
        self.value = value
        msg = f"row {row}: cannot parse field {field!r} from {value!r}"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)


class MissingColumn(DowFactorsError, ValueError):
    pass


class SchemaViolation(DowFactorsError, ValueError):
    pass


# features

class MissingCell(DowFactorsError, ValueError):
    pass


class DegenerateWeek(DowFactorsError, ValueError):
    pass


class NonPositiveInput(DowFactorsError, ValueError):
    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"log requires positive input; got {value!r} at index {index}")


class EmptySeries(DowFactorsError, ValueError):
    pass


class UnknownTicker(DowFactorsError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown ticker"


class FactorFileError(DowFactorsError, ValueError):
    pass


# clustering

class InvalidK(DowFactorsError, ValueError):
    pass


class EmptyMatrix(DowFactorsError, ValueError):
    pass


# models

class RankDeficient(DowFactorsError, ValueError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"design matrix is rank deficient: column {column!r} is "
                         "(nearly) a linear combination of the preceding columns")


class TooFewRows(DowFactorsError, ValueError):
    pass


class DimensionMismatch(DowFactorsError, ValueError):
    pass


class ModelFormatError(DowFactorsError, ValueError):
    pass


# evaluation

class DegenerateSplit(DowFactorsError, ValueError):
    pass


class ZeroVariance(DowFactorsError, ValueError):
    pass
