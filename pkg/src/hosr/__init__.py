"""High-order surface and curve reconstruction from linear triangulations."""
