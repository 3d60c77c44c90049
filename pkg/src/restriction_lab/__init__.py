"""restriction-lab: numerical laboratory for Fourier extension estimates on degenerate radial hypersurfaces."""
__version__ = "0.1.0"

from .hypersurface import (RadialPhase, EllipticPhase, affine_density, ellipticity_diagnose,
                           rescale_annulus, read_phase_file)
from .decomposition import (monomial_intervals, dyadic_annuli, admissible_pair, unweighted_range,
                            off_scaling_exponents)
from .extension import (FrequencyGrid, SpacetimeGrid, Field, TwoScaleSetup, AliasingError,
                        SupportError, extend, extend_direct, iter_extend, kappa, two_scale_operators)
from .norms import lq_spacetime, lq_streaming, ratio_functional, decay_fit
from .wavepacket import decompose, reconstruct, verify_packet_properties, time_slab_pieces
from .tubes import TubeFamily, build_partition, classify, pi_surface, count_experiment
from .config import ConfigError, ExperimentConfig, load_config

__all__ = [
    "__version__",
    "RadialPhase", "EllipticPhase", "affine_density", "ellipticity_diagnose", "rescale_annulus",
    "read_phase_file", "monomial_intervals", "dyadic_annuli", "admissible_pair", "unweighted_range",
    "off_scaling_exponents", "FrequencyGrid", "SpacetimeGrid", "Field", "TwoScaleSetup",
    "AliasingError", "SupportError", "extend", "extend_direct", "iter_extend", "kappa",
    "two_scale_operators", "lq_spacetime", "lq_streaming", "ratio_functional", "decay_fit",
    "decompose", "reconstruct", "verify_packet_properties", "time_slab_pieces", "TubeFamily",
    "build_partition", "classify", "pi_surface", "count_experiment", "ConfigError",
    "ExperimentConfig", "load_config",
]
