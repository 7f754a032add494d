"""refeednet: traffic-density micro-CNN with QoE-gated reFeed retraining."""

__version__ = "0.1.0"
