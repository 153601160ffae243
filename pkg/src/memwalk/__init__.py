"""Simulation and exact theory for the shape of memorised Brownian walks."""
from .kernels import (
    Exponential,
    HalfNormal,
    KernelDescriptor,
    KernelSpecError,
    Lomax,
    StretchedExponential,
    Uniform,
    parse_kernel_spec,
)
from .sampler import MemorySet, RngStream, campbell_moment_oracle, next_arrival, sample_memory_set, sample_memory_times
from .shape import (
    AsphericityEstimate,
    EllipseParams,
    GyrationTensor,
    TensorBatch,
    align_for_density,
    asphericity_estimate,
    eigen_decomposition,
    ellipse,
    gyration_tensor,
)
from .simulate import simulate_tensors
from .special import regularized_lower_gamma, regularized_upper_gamma
from .theory import (
    ConvergenceError,
    PrimitiveIntegrals,
    TheoryResult,
    a2_limit,
    alpha,
    beta,
    closed_form_a2,
    primitive_integrals,
    tensor_moment_oracle,
)

__version__ = "0.1.0"
