from typing import Optional, Union


class BaseError(Exception):
    """
    Base package error.
    """


class DomainError(BaseError, ValueError):
    """
    Membership function domain error (non-finite input or invalid fuzzy set parameters).
    """


class DegenerateWeightsError(DomainError):
    """
    Type reduction weights are both zero.
    """


class ContractError(BaseError, ValueError):
    """
    Vector, matrix or network dimensions do not match.
    """


class ConfigurationError(BaseError, ValueError):
    """
    Invalid configuration value.
    """


class DataError(BaseError):
    """
    Dataset parsing error.
    """

    def __init__(
            self,
            source: str,
            row: Optional[int],
            column: Optional[Union[int, str]],
            message: str,
    ):
        self.source = source
        self.row = row
        self.column = column
        self.message = message

        location = ', '.join(
            part for part in (
                f"row {row}" if row is not None else '',
                f"column {column}" if column is not None else '',
            ) if part
        )
        super().__init__(f"{source}: {location}: {message}" if location else f"{source}: {message}")


class NumericError(BaseError):
    """
    Numerical failure (linear solve, non-finite values).
    """


class DivergenceError(NumericError):
    """
    Training diverged.
    """


class PersistenceError(BaseError):
    """
    Model file reading error.
    """


class CandidateShortageWarning(UserWarning):
    """
    Fewer rule center candidates than requested rules were found.
    """
