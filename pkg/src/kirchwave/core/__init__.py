from .spectral import (
    DomainGrid,
    SpectralField,
    eigenvalue,
    from_physical,
    norm_h2,
    norm_h3,
    norm_l2,
    to_physical,
)
from .memory import (
    HistoryField,
    HistoryGrid,
    KernelSpec,
    SpaceLevel,
    build_history_grid,
    check_history_dissipation,
    make_exponential_kernel,
    transport_rhs,
    weighted_inner,
)
from .model import (
    ProblemSpec,
    Violation,
    default_problem,
    validate_hypotheses,
    validate_lyapunov_params,
)
from .dynamics import (
    NumericalAbort,
    Scheme,
    StepperConfig,
    SystemState,
    initial_state,
    rhs,
    simulate,
    step_imex,
    step_reference,
)
from .energy import EnergyReport, PairConstants, eval_A1_B1, eval_I1, eval_pair, monitor_dissipation
from .decomposition import (
    TriState,
    check_w2_bound,
    fit_exponential_decay,
    run_decomposition,
    step_decomposed,
)
from .experiments import (
    EnsembleSpec,
    run_absorbing_probe,
    run_convergence_study,
    run_pair_study,
)
