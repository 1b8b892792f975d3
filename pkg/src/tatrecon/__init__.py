"""Thermoacoustic tomography: Neumann-series reconstruction in 2D."""
from .grid import (Grid2D, Region, ScalarField, SpeedModel, eval_speed, hd_norm, l2_norm,
                   l2_rel_error)
from .wave import (BoundaryTrace, PMLProfile, WaveState, energy, forward_measure, pml_loss,
                   step)
from .elliptic import harmonic_extend, project_hd, solve_dirichlet
from .time_reversal import apply_error_operator, time_reverse
from .eikonal import critical_time, fast_sweep
from .observation import Cutoff
from .rays import (estimate_T1, snell_split, symbol_of_K, trace_broken_ray, trace_geodesic,
                   visibility_classify)
from .neumann import NSOptions, ReconstructionReport, reconstruct_ns, reconstruct_tr, stop_decision
from .phantoms import add_noise, load_image_phantom, shepp_logan

__version__ = "0.1.0"
