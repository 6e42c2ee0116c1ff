"""Simulator for single-molecule radical-pair detection with an NV spin sensor."""

from .analytics import (AnalyticParams, RateFit, SensitivityCurve, analytic_signal,
                        analytic_signal_general, eta_analytic, find_optimum,
                        fit_keff, keff_map, sensitivity)
from .geometry import (FieldVector, Geometry, bfield_from_angles, image_charge_field,
                       lab_to_nv_frame, nv_to_lab_frame, transverse_component)
from .hamiltonian import (H6_TENSOR, HyperfineTensor, NVParams, RateParams, RPParams,
                          build_H_dipolar, build_H_NV, build_H_RP, build_H_total,
                          build_register)
from .liouville import (JumpTerm, Liouvillian, assemble, dephasing_jump,
                        recombination_jumps, relaxation_jumps)
from .model import BFieldSpec, SensorModel
from .montecarlo import ShotConfig, Trajectory, closed_form_average, ensemble_average, \
    sample_trajectory
from .propagate import (SignalTrace, TimeGrid, initial_state, observables,
                        propagate_dense, propagate_krylov)
from .pulses import effective_hamiltonian_error, sequence_error, sequence_unitary
from .spinalg import (SpinRegister, SpinSite, embed, embed_factors, pair_basis,
                      partial_trace, pauli_matrices, spin_matrices)

__version__ = "0.1.0"
