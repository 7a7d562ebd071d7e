"""Spectra of continuum Fibonacci Schroedinger operators and their sums.

Finite-level band sets come from the trace-map recursion; Minkowski sums of
them model separable multidimensional spectra.  Two structural checks run on
top: a gap-free half-line in ``Sigma + Sigma`` at high energy and
small-dimension structure at low energy.
"""

from .intervals import (
    EmptySetError, Interval, IntervalSet, covers_interval, diameter, gaps, hausdorff, hull,
    largest_gap, measure, minkowski_power, minkowski_sum, normalize, square_image,
)
from .trace import (
    TracePoint, TraceSequence, escape_index, fricke_vogt, per2_curve_point, trace_map,
    trace_map_inv, trace_sequence,
)
from .transfer import (
    Model, Piece, constant_piece_matrix, fibonacci_word, initial_traces, invariant,
    invariant_closed_form, log_derivative_invariant, piece_matrix, word_matrix,
)
from .spectrum import (
    ENERGY, T_PARAM, SamplingError, SpectrumApproximant, approximant, band_set,
    rayleigh_bound, rayleigh_quadrature, spectrum_in_t,
)
from .cantor import (
    DimensionEstimate, ThicknessReport, box_count, box_dimension, central_cantor,
    newhouse_sum_check, thickness, thickness_bruteforce,
)
from .bethe_sommerfeld import (
    BSCertificate, WindowFamily, certify, check_abs_conditions, decompose_windows,
    direct_sum_tail, verify_half_line,
)
from .lowenergy import LowEnergyReport, isolated_point_scan, lambda_sweep, low_energy_report

__version__ = "0.1.0"
