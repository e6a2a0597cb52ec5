# Utility modules
from .io import atomic_write_text, atomic_write_frame, read_json, write_json, read_jsonl, write_jsonl
from .log import configure_logging
from .rng import derive_seed, make_rng
