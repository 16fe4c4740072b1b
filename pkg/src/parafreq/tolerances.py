"""Single tolerance table keyed by check name.

``PARAFREQ_TOLERANCE_SCALE`` multiplies every entry; it is read at lookup
time so tests and the CLI can change it without reloading the module.
"""

import os

TOLERANCES = {
    # frequency values and identities
    "caloric_frequency": 1e-9,
    "monotone": 1e-8,  # times (1 + |U(a)|)
    "stationary": 1e-6,  # |U'| allowed before the equality case applies
    "equality_case": 1e-7,
    "hessian_identity": 1e-7,
    "log_I_identity": 1e-5,
    "I_prime": 1e-5,  # times (1 + |I|)
    "dual_form": 1e-8,  # times (1 + |D| + tau I)
    "cauchy_schwarz": 1e-10,
    # bounds
    "backwards_bound": 1e-6,  # multiplicative slack
    "backwards_equality": 1e-8,
    "general_bounds": 1e-5,  # times (1 + |U| + tau(a))
    "corollary_bound": 1e-5,  # multiplicative slack
    # infrastructure
    "mass": 1e-8,
    "self_adjointness": 1e-8,
    # Ornstein-Uhlenbeck spectrum
    "hermite_ode": 1e-9,
    "ou_eigen": 1e-9,
    "commutator": 1e-10,
    "ou_spectrum": 1e-8,
    "ou_scaling": 1e-9,
}


def tolerance_scale():
    raw = os.environ.get("PARAFREQ_TOLERANCE_SCALE", "1")
    try:
        scale = float(raw)
    except ValueError:
        raise ValueError(f"PARAFREQ_TOLERANCE_SCALE must be a number, got {raw!r}") from None
    if not scale > 0:
        raise ValueError("PARAFREQ_TOLERANCE_SCALE must be positive")
    return scale


def tolerance(name):
    return TOLERANCES[name] * tolerance_scale()
