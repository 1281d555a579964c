"""Streaming social-media corpus collector.

Builds named tweet corpora from a stream source under four collection
strategies (account lists, keywords/hashtags, metadata filters, random
sampling), measures collection completeness with injected probe tweets,
supports mid-run amendments with asymmetric backfill, derives information
authorities from follow graphs, and exports ToS-compliant dehydrated
ID lists.  Verified end-to-end against a deterministic platform simulator
with a brute-force ground-truth oracle.
"""

__version__ = "0.1.0"
