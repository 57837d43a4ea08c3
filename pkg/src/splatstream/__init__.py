"""Real-time novel-view streaming from sparse multi-view video: forward
Gaussian-splat rendering, pluggable pipeline stages, and a keyframe-snippet
scheduler with explicit latency accounting."""

__version__ = "0.1.0"
