"""Sharp identified sets and bootstrap inference for moment models with missing data."""
from .inference import (
    ConfidenceRegion,
    TestResult,
    bootstrap_test,
    confidence_region,
    confidence_regions,
    naive_bootstrap_test,
    test_statistic,
)
from .io import load_dataset, load_panel, save_dataset
from .model import (
    Box,
    CustomFinite,
    Dataset,
    FiniteSet,
    FunctionModel,
    LinearMissingX,
    MeanBound,
    MomentModel,
    Observation,
    get_model,
)
from .multiperiod import PanelDataset3, PanelMean, PanelObservation3, criterion_3, psi_hat_3
from .oracle import max_over_couplings, run_oracle_suite
from .setestimate import IdentifiedSetEstimate, ThetaGrid, estimate_set, eta_rule, hausdorff
from .simulate import DgpSpec, McReport, run_study, simulate_dataset
from .support import DirectionSet, EvaluationMatrix, build_matrix, criterion, psi_hat

__version__ = "0.1.0"
