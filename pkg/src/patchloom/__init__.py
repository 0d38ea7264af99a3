"""patchloom: learn statement-level corrective patches from repository history."""

__version__ = "0.1.0"
