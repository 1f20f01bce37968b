"""Capacity of linear periodically time-varying channels with additive
cyclostationary Gaussian noise, with a TF-OFDM baseline and outage tools."""

from .capacity_freq import SpectralGrid, build_spectral_grid, capacity_thm2
from .capacity_time import (CapacityResult, TruncationSweep, capacity_thm1,
                            capacity_thm1_converged, katayama_capacity,
                            optimal_input_covariance)
from .channel import (Branch, ChannelInstance, GeneratorSpec, LptvFilter, Modulation,
                      build_block_taps, build_channel_matrix, load_channel, save_channel,
                      synth_lptv_channel, truncate_channel_memory)
from .cyclo import PolyphaseFrame, dcd_decompose, dcd_reconstruct
from .errors import ChannelFileError, ConfigError, DegeneracyError, LengthMismatchError
from .noise import (CyclicAutocorrelation, KatayamaParams, NassarParams,
                    katayama_autocorrelation, nassar_autocorrelation, white_noise)
from .numerics import WaterfillAllocation, inv_sqrt_psd, sym_evd, waterfill, waterfill_spectral
from .ofdm import TfOfdmGrid, build_tf_grid, tf_ofdm_rate
from .outage import (OutageEnsemble, OutageEstimate, fading_rate, outage_probability_mc,
                     outage_upper_bound_mc)

__version__ = "0.1.0"
