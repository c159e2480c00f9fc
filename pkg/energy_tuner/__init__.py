"""Closed-loop tuning of carrier shutdown thresholds for a multi-carrier radio sector."""
