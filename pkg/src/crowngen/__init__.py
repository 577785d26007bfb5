"""crowngen: dental crown shell generation as margin-aware point cloud
completion, plus surface reconstruction and margin-line evaluation."""

__version__ = "0.1.0"
