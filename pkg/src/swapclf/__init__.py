"""Swap-test quantum kernel classifier: simulation, noise modelling and experiments."""
from .classifier import (
    ClassifierOutcome,
    ClassifierSpec,
    Dataset,
    TestPoint,
    assign_label,
    build_forking_circuit,
    build_toy_circuit,
    encode_amplitude,
    helstrom_expectation,
    kernel_oracle,
    run_hadamard,
    run_swaptest,
)
from .circuit import Circuit, GateOp, simulate
from .qstate import Counts, DensityMatrix, Observable, StateVector

__version__ = "0.1.0"
