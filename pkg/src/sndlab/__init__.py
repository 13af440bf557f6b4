"""sndlab: distillation-based intrinsic motivation on a PPO gridworld agent.

The package bundles a small numpy neural-network core, a procedural
multi-room gridworld, a PPO learner with a dual-head critic, four novelty
modules (a fixed-target distillation baseline plus three self-supervised
variants), and the diagnostic analyses used to compare them.
"""

__version__ = "0.1.0"
