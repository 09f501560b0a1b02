"""Clarity-stratified evaluation harness for mobile GUI agents.

The package turns a determinate user intent into four instruction variants
of decreasing clarity, serves them to an agent through an interaction
interface backed by a simulated user, sandboxes the agent's device traffic
behind a transparent proxy, and adjudicates the captured trajectory into
outcome, process, and interaction metrics.
"""

__version__ = "0.1.0"
