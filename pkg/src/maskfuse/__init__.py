"""maskfuse: mask-stream fusion and J/F evaluation toolkit for referring
video object segmentation pipelines."""

from .errors import (CorruptEncodingError, MaskFuseError, MissingInputError,
                     ShapeMismatchError, ValidationError)
from .fusion import (FusionConfig, PromptSelection, cmf_frame, cmf_track,
                     combine_candidates, select_prompt)
from .interchange import (Manifest, MaskTrack, ScoredCandidateSet,
                          load_manifest, read_mask, read_track, save_manifest,
                          write_mask, write_track)
from .masks import (area, boundary_pixels, connected_components, dilate,
                    intersection, iou, union)
from .metrics import (EvalRecord, EvalReport, boundary_f, eval_corpus,
                      eval_track, region_similarity_j)
from .refiner import NoiseParams, SyntheticScene, generate_scene, propagate
from .rle import RleMask, decode_rle, encode_rle

__version__ = "0.1.0"
