"""flowcert: desk-scale certificates for gradient-flow convergence.

Four numerical subsystems plus an experiment harness:

- sequences: discrete summability certificates for monotone sequences whose
  steps obey a power-type drop law;
- gradientflow: finite-dimensional model flows with a verified decay
  inequality, adaptive integration, and the endpoint-controlled length bound;
- cylinder: Gaussian surface area, entropy estimates, and the discrete C^2
  graph distance for rotational graphs over the shrinking cylinder;
- mcf: rescaled curvature flow of such graphs, the empirical decay-exponent
  fit, and the closeness experiment tying the pieces together.
"""

__version__ = "0.1.0"

from .cylinder import (  # noqa: F401
    CylinderGraph,
    CylinderSpec,
    DistanceReport,
    cylinder_F,
    dist_R,
    estimate_entropy,
    graph_F,
)
from .gradientflow import (  # noqa: F401
    GradientProblem,
    Trajectory,
    builtin_problems,
    decay_envelope_check,
    effective_bound,
    integrate,
    problem_by_name,
    sqrt_segment_sum,
)
from .mcf import (  # noqa: F401
    CloseReport,
    FlowControls,
    FlowHistory,
    FlowState,
    RunConfig,
    close_experiment,
    evolve,
    lojasiewicz_fit,
)
from .sequences import (  # noqa: F401
    CertificateConstants,
    HypothesisReport,
    MonotoneSequence,
    check_hypothesis,
    check_power_gap,
    constructive_bound,
    extremal_sequence,
    random_admissible_sequence,
)
