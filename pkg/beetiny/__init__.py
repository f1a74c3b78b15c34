# pylint: disable=missing-docstring
from .bee import Bee
from .extensions import ablation, datasets, downstream, exploration


__all__ = ['Bee', 'ablation', 'datasets', 'downstream', 'exploration']
__version__ = "0.1.0"
