__version__ = '0.1.0'

from    multipathga.error import (ConditioningError, ConfigError, DomainError, EstimationError, GaRunError,
                                  InvalidKeysException, MultipathError, NoUsableBandError)
from    multipathga.signal_synth import (AwgnSpec, ChirpSpec, MultipathChannel, SampledSignal, add_awgn,
                                         apply_channel, generate_chirp, window_value)
from    multipathga.spectral import (Spectrum, ThresholdedSupport, build_p, dft, select_support, steering_matrix,
                                     tau_to_lambda)
from    multipathga.error_fn import ParamVector, caef_full, caef_thresholded, ls_amplitudes, raef
from    multipathga.ga_optimizer import GaConfig, Gene, GeneLayout, Individual, decode, run_ga
from    multipathga.estimator import ChannelEstimate, EstimationTask, estimate, parameter_mse
