"""Exception hierarchy. Everything raised on purpose derives from FleetGroupError."""


class FleetGroupError(Exception):
    pass


# -- data loading --------------------------------------------------------------

class DataError(FleetGroupError, ValueError):
    pass


class NoSuchFile(DataError, FileNotFoundError):
    pass


class EmptyFile(DataError):
    pass


class MissingColumn(DataError):
    pass


class NonNumericCell(DataError):
    def __init__(self, row: int, column: str, value: str):
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"row {row}: column {column!r} has non-numeric or non-finite value {value!r}")


class SingleEntity(DataError):
    pass


# -- regression ----------------------------------------------------------------

class FitError(FleetGroupError, ValueError):
    pass


class Underdetermined(FitError):
    pass


class RankDeficient(FitError):
    pass


class DimensionMismatch(FleetGroupError, ValueError):
    pass


class LengthMismatch(FleetGroupError, ValueError):
    pass


# -- community detection -------------------------------------------------------

class EmptyGraph(FleetGroupError, ValueError):
    pass


class ConvergenceFailure(FleetGroupError, RuntimeError):
    pass


# -- meta validation -----------------------------------------------------------

class TooFewObservations(FleetGroupError, ValueError):
    pass


class EmptyValidation(TooFewObservations):
    pass


class TooFewPoints(FleetGroupError, ValueError):
    pass


class InvalidConfig(FleetGroupError, ValueError):
    pass
