"""Command line entry for the parabolic co-design toolkit."""
