"""
Agent
^^^^^

World model, reward models and planner.
"""
