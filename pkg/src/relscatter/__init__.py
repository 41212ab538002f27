"""Relativistic 1-D barrier scattering: semi-analytic wavepackets and finite differences."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BranchError, ConfigError, DivergenceError, GridMismatchError, InstabilityError,
    PoleError, ScatterError, SingularError, StabilityError,
)
from .physics import (  # noqa: E402
    BarrierSpec, DiracSpinorRatios, Family, Kinematics, ParticleSpec, Regime,
    classify_regime, dirac_alphas, potential_at,
)
from .special import gamma, gamma_ratio, log_gamma  # noqa: E402
from .amplitudes import (  # noqa: E402
    BarrierAmplitudes, Mode, StepAmplitudes, convergence, dirac_barrier_closed_form,
    dirac_step_rectangular, kg_step_rectangular, kg_step_smooth, matching_oracle,
    mse_assemble,
)
from .wavepacket import (  # noqa: E402
    InitialGaussian, MomentumSpectrum, SpinorField, charge_density, dirac_spectrum,
    evaluate_dirac, evaluate_kg, kg_spectrum, mse_terms_needed, region_charges,
)
from .fdtd import (  # noqa: E402
    GridSpec, Propagator, build_propagator, evolve, first_derivative_apply,
    second_derivative_apply,
)
from .snapshot import Snapshot, compare, export_snapshot, import_snapshot  # noqa: E402
from .harness import ComparisonReport, ScenarioConfig, run_scenario  # noqa: E402
