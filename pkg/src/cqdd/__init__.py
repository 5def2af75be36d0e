"""Conditioned quantum denoising diffusion on dense statevectors."""
__version__ = "0.1.0"

from .ansatz import AnsatzSpec, DenoiseModel, assign_mu, denoise_step, generate
from .diffusion import NoiseSchedule, forward_diffuse, make_schedule
from .distances import class_loss, mmd, normalization_constant, wasserstein
from .train import TrainerConfig, train_all

__all__ = [
    "AnsatzSpec",
    "DenoiseModel",
    "NoiseSchedule",
    "TrainerConfig",
    "assign_mu",
    "class_loss",
    "denoise_step",
    "forward_diffuse",
    "generate",
    "make_schedule",
    "mmd",
    "normalization_constant",
    "train_all",
    "wasserstein",
]
