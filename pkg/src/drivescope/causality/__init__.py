from .interventions import Intervention, apply_intervention
from .gradients import TokenAttribution, token_gradients
from .attention import HeadResponse, attention_response
from .actmap import ActivationMap, ChannelWeights, activation_map
from .ablation import AblationResult, ablate_component
from .replay import replay_analysis

__all__ = [
    "Intervention", "apply_intervention",
    "TokenAttribution", "token_gradients",
    "HeadResponse", "attention_response",
    "ActivationMap", "ChannelWeights", "activation_map",
    "AblationResult", "ablate_component",
    "replay_analysis",
]
