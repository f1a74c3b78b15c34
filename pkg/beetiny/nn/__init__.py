"""
Numerical core
^^^^^^^^^^^^^^

Dense and recurrent layers with hand-written gradients, Adam, spectral normalization and the
sampling helpers used by the models in :py:mod:`beetiny.agent`.
"""
from .layers import Activation, DenseNet, spectral_normalize
from .optim import Adam, AdamState, adam_step
from .params import ParamTensor, load_checkpoint, save_checkpoint
from .recurrent import GRUCell
from .rng import Rng
