from .entropy import EntropyReport, JointCounts, entropy_report, joint_counts

__all__ = ["EntropyReport", "JointCounts", "entropy_report", "joint_counts"]
