"""Deep session interest network for CTR prediction on a small numpy autodiff core."""

from .config import MODEL_TAGS, RunConfig
from .dsin import DSIN
from .baselines import DIN, YoutubeNet
from .features import ExampleBatch, FeatureVocab, build_vocab, encode_records
from .metrics import auc
from .models import make_model
from .sessionizer import (BehaviorEvent, ExampleRecord, SynthConfig, divide_sessions,
                          generate_synthetic, load_dataset, pad_and_mask, save_dataset)
from .tensor import Tensor, backward, finite_diff_check

__version__ = "0.1.0"
