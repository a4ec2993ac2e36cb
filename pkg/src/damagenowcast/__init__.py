"""Nowcast disaster damage from geotagged social-media activity.

The package splits into small, composable layers: file parsing (:mod:`.ingest`),
spherical geometry and the spatial join (:mod:`.geo`), windowed activity
metrics (:mod:`.metrics`), correlation statistics (:mod:`.stats`), the
analysis pipelines (:mod:`.analysis`), a seeded synthetic generator
(:mod:`.simulate`), and the CLI (:mod:`.cli`).
"""

__version__ = "0.1.0"
