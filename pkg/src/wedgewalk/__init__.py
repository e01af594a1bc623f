"""wedgewalk: non-homogeneous lattice random walks in planar wedges.

Library + CLI for simulating spatially inhomogeneous nearest-neighbour
walks on Z^2 with asymptotically vanishing drift, measuring wedge
exit-time tails at desk scale, and verifying the drift inequalities that
govern which exit-time moments exist.
"""

__version__ = "0.1.0"

from .geometry import (  # noqa: F401
    PolarPoint,
    RectFrame,
    WedgeSpec,
    from_polar,
    in_modified_wedge,
    in_wedge,
    rect_classify,
    to_polar,
)
from .models import (  # noqa: F401
    JumpKernel,
    ModelSpec,
    check_assumptions,
    covariance_at,
    drift_at,
    kernel_at,
)
from .simulate import (  # noqa: F401
    BatchConfig,
    ExitSample,
    boundary_scaling_experiment,
    rect_exit_experiment,
    run_batch,
    run_exit,
    step,
    validate_exit_sample,
)
from .stats import (  # noqa: F401
    SurvivalCurve,
    TailFit,
    fit_tail_exponent,
    moment_probe,
    spitzer_exponent,
    survival_curve,
)
