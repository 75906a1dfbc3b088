"""Console summaries of experiment results."""
