"""Exception hierarchy shared by the solver and the command line."""

# ── Exit codes ───────────────────────────────────────────

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
EXIT_IO = 4


class ClodError(Exception):
    pass


class ConfigError(ClodError):
    """One or more validation problems; all of them are kept in ``errors``."""

    def __init__(self, errors: list[str] | str):
        self.errors = [errors] if isinstance(errors, str) else list(errors)
        super().__init__("; ".join(self.errors))


class ConfigSyntaxError(ConfigError):
    def __init__(self, message: str, line: int | None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


class GeometryError(ClodError):
    pass


class GridIndexError(ClodError, IndexError):
    pass


class SingularSystemError(ClodError, ArithmeticError):
    def __init__(self, line: int, message: str = "zero pivot during elimination"):
        self.line = line
        super().__init__(f"{message} (line {line})")


class AssemblyError(ClodError):
    pass


class DivergenceError(ClodError):
    def __init__(self, step: int, time: float, detail: str = ""):
        self.step = step
        self.time = time
        self.artifacts = None
        msg = f"divergence detected at step {step} (t = {time:.6e} s)"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class SizeLimitError(ClodError):
    pass


class NumericalError(ClodError):
    def __init__(self, message: str, partial=None):
        self.partial = partial
        super().__init__(message)
