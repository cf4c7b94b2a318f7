"""Adversarial self-imitation skill training on a desk-scale kinematic rig.

A policy learns several target-pose skills (and the transitions between
them) by imitating its own best trajectories, selected with a
task-reward-plus-DTW criterion, reinforced through a least-squares
adversarial discriminator, and kept from collapsing onto easy skills by an
adaptive skill selector.
"""

__version__ = "0.1.0"
