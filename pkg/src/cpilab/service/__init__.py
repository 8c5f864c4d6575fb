"""HTTP service wrapping the core measurement and analysis package."""
