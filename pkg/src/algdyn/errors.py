"""Exception types. Each carries a short machine-readable ``code`` that the
CLI reports on refusal."""


class AlgDynError(Exception):
    code = "error"


class FamilyMismatch(AlgDynError, ValueError):
    code = "family_mismatch"


class ParseError(AlgDynError, ValueError):
    code = "parse_error"


class QuotientTooLarge(AlgDynError):
    code = "quotient_too_large"


class NotCertified(AlgDynError):
    code = "not_certified"


class TruncationTooLoose(AlgDynError):
    code = "truncation_too_loose"


class DegenerateQuotient(AlgDynError):
    code = "degenerate_quotient"


class DeterminantMismatch(AlgDynError):
    """The two determinant algorithms disagree. Always a bug."""

    code = "determinant_mismatch"


class NearSingularCharacter(AlgDynError):
    code = "near_singular_character"


class NotAFixedPoint(AlgDynError, ValueError):
    code = "not_a_fixed_point"


class LiftCutHit(AlgDynError, ValueError):
    code = "lift_cut_hit"


class RejectionRateExceeded(AlgDynError):
    code = "rejection_rate_exceeded"


class EnumerationCapExceeded(AlgDynError):
    code = "enumeration_cap_exceeded"


class BoundInapplicable(AlgDynError):
    code = "bound_inapplicable"
