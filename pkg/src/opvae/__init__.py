"""Permutation-invariant operator learning with uncertainty quantification.

The package learns mappings between function spaces from variable-size
sensor observations: a set-attention embedding turns an observation set
into a fixed-size code, and a conditional VAE around a branch-trunk
operator network turns that code into a distribution over output
functions.  Alongside the model it ships the pieces needed to run the
elliptic-PDE benchmarks end to end: GP input-field samplers,
finite-difference solvers, exact GP-posterior reference oracles, and
ensemble-comparison metrics.
"""

from .autodiff import Tensor, backward, concat, grad_check, gradients, softmax
from .config import ExperimentConfig, config_echo, config_load, default_config
from .datasets import OperatorDataset, dataset_read, dataset_write, generate_dataset
from .embedding import EmbedParams, attention_pool, embed_observations, embed_sensor
from .fields import FieldSample, Grid1d, Grid2d, SensorSet
from .gp import (Kernel1d, Kernel2d, MeanFunction, cholesky_jitter, gram_matrix,
                 kernel_eval_1d, kernel_eval_2d, sample_gp)
from .metrics import EnsembleStats, fit_gaussian, relative_errors, report_table, w2_gaussian
from .model import (DecoderParams, EncoderParams, OperatorModel, decode, elbo_loss,
                    encode, kl_gauss, reparam_sample, vidon_forward, vidon_loss)
from .nn import AdamState, Mlp, adam_init, adam_step, mlp_forward, mlp_init
from .pde import solve_diffusion_1d, solve_elliptic_2d, solve_poisson_2d
from .reference import GpPosterior, gp_posterior, reference_ensemble, sample_posterior
from .training import (SensorPolicy, TrainPlan, corrupt_observations, pregenerate_batches,
                       predict_ensemble, regspace_select, sample_locations_1d,
                       sample_sensor_count, train)

__version__ = "0.1.0"
