"""Secure multi-UAV communication: desk-scale simulator and MADDPG trainer.

Multiple communication UAVs plus one friendly jammer learn trajectories and
transmit powers that maximize fair sum secrecy throughput against a moving
aerial eavesdropper, under energy, speed, acceleration, and separation
constraints.
"""

__version__ = "0.1.0"

from .config import SimConfig, UserLayout, load_config, place_users  # noqa: F401
from .energy import RotorcraftParams, propulsion_power  # noqa: F401
from .env import SecrecyEnv  # noqa: F401
