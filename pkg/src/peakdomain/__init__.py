"""Finite-peak cocycles, fundamental domains, Hopf decomposition and Bowen entropy on reference systems."""

__version__ = "0.1.0"

from .systems import (  # noqa: E402
    CAT_MAP,
    FULL_SHIFT,
    NORTH_SOUTH,
    DomainError,
    NoJacobianError,
    ShiftPoint,
    TorusPoint,
    cat_apply,
    cat_inverse,
    distance,
    get_system,
    ns_apply,
    ns_inverse,
    ns_log_jacobian,
    orbit,
    shift_apply,
)
from .observables import (  # noqa: E402
    AffineOf,
    Constant,
    LogJacobian,
    NSLogJacobian,
    ShiftWindow,
    TorusTrig,
    cylinder_dictionary,
    indicator,
)
from .cocycle import (  # noqa: E402
    CertificationError,
    Certified,
    Uncertified,
    cocycle_eval,
    cocycle_table,
    fundamental_domain_test,
    peak_profile,
    section_pi,
    verify_shift_relation,
)
