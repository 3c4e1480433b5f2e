"""Offline planner for energy-efficient covert THz communication.

A ground access point sends confidential data to scheduled users through a
UAV-mounted intelligent reflecting surface while a second UAV jams potential
eavesdroppers with artificial noise of uniformly random power.  The planner
optimizes user scheduling, transmit/jamming powers, IRS phase shifts and both
UAV trajectories to maximize the minimum average energy efficiency (mAEE)
under an analytic covertness constraint.
"""

__version__ = "0.1.0"

SPEED_OF_LIGHT = 3.0e8  # m/s, model constant shared by all channel formulas
