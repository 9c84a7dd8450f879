"""Tests package for the multirank multiplex centrality toolkit."""
