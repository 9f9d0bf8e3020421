from .model import (
    CellGrid,
    ChannelState,
    FadingModel,
    MobilityModel,
    relay_set,
    sample_channel_state,
    step_mobility,
)

__all__ = [
    "CellGrid",
    "ChannelState",
    "FadingModel",
    "MobilityModel",
    "relay_set",
    "sample_channel_state",
    "step_mobility",
]
