"""Exception hierarchy shared by every module."""


class HJHalfError(Exception):
    """Base class for all errors raised by :mod:`hjhalf`."""


class NotMonotone(HJHalfError):
    pass


class Unbounded(HJHalfError):
    pass


class NotCoercive(HJHalfError):
    pass


class InvalidLimiter(HJHalfError):
    def __init__(self, report):
        self.report = report
        super().__init__("; ".join(report.violations) or "invalid set limiter")


class InadmissibleFlux(HJHalfError):
    """The boundary flux does not meet the hypotheses of the test-function builder."""


class NotStrictlyDecreasing(InadmissibleFlux):
    pass


class StepTooLarge(HJHalfError):
    pass


class TailBoundUnverified(HJHalfError):
    pass


class VerificationFailed(HJHalfError):
    def __init__(self, report):
        self.report = report
        super().__init__(report.summary())


class CFLViolation(HJHalfError):
    pass


class OrderingViolated(HJHalfError):
    def __init__(self, report):
        self.report = report
        step, node = report.first_violation
        super().__init__(f"ordering violated at step {step}, node {node}")


class ParseError(HJHalfError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class UnknownPreset(HJHalfError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown preset"
