"""A one-seed, reduced version of the ordering experiment (about 20 seconds on one core).

The full three-seed run lives in tests/test_acceptance.py (criteria 6 and 7).
"""

import sys
import tempfile

from dsin.config import RunConfig
from dsin.experiment import ORDERING_CONFIG, ORDERING_MODELS, run_seed, summarize

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
base = RunConfig().replace(**{**ORDERING_CONFIG, "n_users": 2000})

with tempfile.TemporaryDirectory() as out:
    results = run_seed(seed, out, ORDERING_MODELS, base)
    print(summarize(results))
    for r in results:
        print(f"{r.model:16s} best epoch {r.best_epoch} best AUC {r.best_auc:.4f}  ({r.seconds:.1f}s)")
