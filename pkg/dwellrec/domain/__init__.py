"""
Domain Layer - Core recommendation logic and entities.

This layer contains:
- Domain entities (dwell records, impressions, samples, reports)
- Dwell discretization and distribution analytics
- Synthetic log generation and dataset construction
- The user encoder plugin family and the recommender model
- Ranking metrics

Nothing in this layer performs network I/O.
"""
