"""Adaptive recommendation engine over proximity networks.

The package is organized around one shared currency, the sparse proximity
matrix, which every subsystem either derives, learns, or consumes:

- ``corpus``: record ingestion and the raw incidence/citation relations.
- ``proximity``: co-citation, bibliographic coupling, and keyword/record
  Jaccard proximities; neighborhoods, hub/authority ranking, semi-metric
  diagnostics.
- ``trails``: traversal proximity learned from user click paths.
- ``spreading``: spreading-activation retrieval over any proximity network.
- ``conversation``: fuzzy keyword categories built in dialogue with the user,
  record recommendation, and Hebbian adaptation of keyword proximity.
- ``engine`` / ``service``: the long-running loop (sessions, queries, clicks,
  adaptation cycles, persistence) and its HTTP surface.
- ``simulate``: synthetic user communities driving the full loop.
"""

__version__ = "0.1.0"
