import enum


class ExitCode(enum.IntEnum):
    OK = 0
    BAD_ARGUMENTS = 2
    UNSAFEGUARDED_DENOMINATOR = 3
    IO = 4
    INTEGRITY = 5


class SafeguardError(Exception):
    """Base error. `exit_code` is what the CLI returns when this escapes a command."""

    exit_code: ExitCode = ExitCode.BAD_ARGUMENTS

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


# Bad input / bad arguments
class InvalidSignalError(SafeguardError):
    pass


class DimensionError(SafeguardError):
    pass


class SymmetryError(SafeguardError):
    pass


class ParameterError(SafeguardError):
    pass


class DegenerateInputError(SafeguardError):
    pass


class ChannelTooLongError(SafeguardError):
    pass


class InsufficientPaddingError(SafeguardError):
    pass


class EmptyRecordingError(SafeguardError):
    pass


class UnsafeguardedDenominatorError(SafeguardError):
    exit_code = ExitCode.UNSAFEGUARDED_DENOMINATOR

    def __init__(self, bin_index: int, magnitude: float, min_mag: float):
        super().__init__(
            f"Denominator bin {bin_index} has magnitude {magnitude:.3e} < {min_mag:.3e}; "
            "stimulus is not safeguarded"
        )
        self.bin_index = bin_index
        self.magnitude = magnitude
        self.min_mag = min_mag


# I/O
class AudioIOError(SafeguardError):
    exit_code = ExitCode.IO


class UnsupportedFormatError(AudioIOError):
    pass


class OverloadError(AudioIOError):
    def __init__(self, peak: float, index: int):
        super().__init__(f"Sample {index} has magnitude {peak:.6g} > 1.0; refusing to clip")
        self.peak = peak
        self.index = index


class IncompleteSessionError(SafeguardError):
    exit_code = ExitCode.IO

    def __init__(self, missing: list[str]):
        super().__init__(f"Session is missing artifacts: {', '.join(missing)}")
        self.missing = missing


# Integrity
class IntegrityError(SafeguardError):
    exit_code = ExitCode.INTEGRITY


class UnsupportedVersionError(IntegrityError):
    pass


class FloorViolationError(IntegrityError):
    def __init__(self, bin_index: int, magnitude: float, floor: float):
        super().__init__(
            f"Bin {bin_index} magnitude {magnitude:.6e} is below its floor {floor:.6e}"
        )
        self.bin_index = bin_index
        self.magnitude = magnitude
        self.floor = floor
