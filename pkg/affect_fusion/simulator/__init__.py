"""
Synthetic classrooms with known ground truth, to measure fusion against single-cue baselines.
"""
