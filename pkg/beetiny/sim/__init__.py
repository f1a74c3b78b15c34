"""
Tabletop simulator
^^^^^^^^^^^^^^^^^^
"""
from .examples import generate_relevant_examples
from .layouts import LAYOUTS, get_layout
from .metrics import interaction_report
from .tabletop import TabletopEnv
from .tasks import TASKS, get_task
