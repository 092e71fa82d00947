"""Audio clip directories to EMB1/LBL1 embedding files."""

__version__ = "0.1.0"

from .extraction import AudioManifest, discover_clips, extract
from .features import MfccParams, mfcc_stats, wav2vec2_mean_pool
from .formats import write_emb1, write_lbl1
