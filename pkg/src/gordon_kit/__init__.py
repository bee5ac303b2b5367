"""Eigenvalue-free disks for Jacobi and Sturm-Liouville operators via
Gordon-type periodic approximation."""

from .errors import PrecisionBudgetError, WindowError
from .estimators import JacobiGordonCertifier, SturmLiouvilleGordonCertifier
from .gronwall import DiscreteGronwallInput, gronwall_continuous_bound, gronwall_discrete_bound
from .jacobi import (
    CoeffSeq, GordonCertificate, ScanRow, State2, disk_radius_jacobi, gordon_defect, gordon_rate,
    growth_scan, perturbation_bound, propagate, three_block_gap, transfer, transfer_step,
)
from .mat2c import mat2, mat2_det, mat2_inverse, mat2_norm2
from .measures import LocalMeasure, PiecewiseConstant, phi, unif_norm, wasser_norm, window_norm_bound
from .quasiperiodic import (
    Frequency, example_certificate, liouville_frequency, make_sampler, quasi_defect, sample_coeffs,
    torus_points,
)
from .report import ScanReport, __version__
from .spectrum import truncated_spectrum, truncated_spectrum_report
from .sturm import (
    CState, SLCoeff, disk_radius_sl, periodize, sl_envelopes, sl_gordon_defect, sl_gordon_rate,
    sl_growth_scan, sl_perturbation_bound, sl_propagate, sl_three_block, sl_transfer,
)
