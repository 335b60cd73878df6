"""mask_export: thin adapters that serialize raw detector/refiner model
outputs into the maskfuse interchange directory layout.

This package deliberately does not import the main toolkit: it speaks only
the documented wire formats (manifest.json, candidates.json with
column-major RLE, 0/255 PNG mask files), so the toolkit remains the single
source of truth for fusion and metrics.
"""

from .export import ExportError, ExportJob, export_outputs

__version__ = "0.1.0"
