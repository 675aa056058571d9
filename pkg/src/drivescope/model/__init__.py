from .prompt import PromptBundle, COMPONENTS, build_prompt, featurize, token_layout
from .network import Planner, PredictionResult
from .params import init_params, save_checkpoint, load_checkpoint

__all__ = [
    "PromptBundle", "COMPONENTS", "build_prompt", "featurize", "token_layout",
    "Planner", "PredictionResult",
    "init_params", "save_checkpoint", "load_checkpoint",
]
