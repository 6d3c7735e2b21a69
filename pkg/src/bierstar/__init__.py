"""Deterministic LEO-constellation simulator and stateless geographic
multicast engine: cell-encoded headers, per-epoch target-cell forwarding,
classic/segmented bitstring and greedy geographic baselines, and the four
evaluation metrics (header size, reach rate, dwell time, resilience)."""

__version__ = "1.0.0"
