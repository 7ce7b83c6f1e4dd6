"""Defect labeling toolkit for git repositories and Jira-style issue trackers.

Builds commit/issue link candidates, bug-fixing and bug-inducing labels under
several strategies, release-level defect datasets, and the evaluation
statistics to compare them.
"""

__version__ = "0.1.0"
