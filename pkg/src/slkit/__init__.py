"""Forward and inverse Dirichlet Sturm-Liouville problems on [0, pi].

The potential is handled through sigma, an antiderivative of q, so that
distributional potentials (q in W_2^-1) are covered.
"""
from .errors import (
    BracketError,
    DomainError,
    IllPosedDataError,
    SingularBasisError,
    SlkitError,
    SolverError,
    UnsupportedSmoothnessError,
    ValidationError,
)
from .experiments import (
    NoiseSpec,
    RateReport,
    asymptotic_functionals,
    convergence_study,
    noise_floor_study,
    perturb,
    remainder_sequences,
    smoothness_class_sigma,
)
from .inverse import (
    FiniteDataSet,
    GLMProblem,
    assemble_glm,
    background_sigma,
    glm_reconstruct,
    reconstruct,
    roundtrip_check,
    shift_normalize,
)
from .potential import PotentialQ, SigmaFunction, fourier_projections, sigma_from_q, sobolev_norm
from .spectral_data import (
    OmegaParams,
    RegularizedSequence,
    check_omega,
    phi_residual,
    regularize,
    s_map,
    unregularize,
    weighted_norm,
)
# imported last: the function shadows the submodule of the same name
from .forward import ShootingResult, SpectralData, eigenvalues, integrate_s, norming_constants, spectral_data

__version__ = "0.1.0"
