"""Bundled experiment spec files (*.spec), runnable by name via the CLI."""
