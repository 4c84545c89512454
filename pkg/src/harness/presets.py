"""
Network-shape and dataset presets

Shape ids name hidden layers: 1L has none, 2L<k> has one hidden layer of k
neurons, 3L has hidden layers of 50 and 25.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

from src.utils.exceptions import ConfigError

HIDDEN_LAYERS: Dict[str, Tuple[int, ...]] = {
    "1L": (),
    "2L10": (10,),
    "2L15": (15,),
    "2L20": (20,),
    "2L25": (25,),
    "2L50": (50,),
    "2L100": (100,),
    "2L150": (150,),
    "3L": (50, 25),
}


@dataclass(frozen=True)
class DatasetPreset:
    shapes: Tuple[str, ...]
    epochs: int
    eta: float = 0.7
    rv_learning_rate: float = 0.01
    # full runs take hours on one core
    long: bool = False


DATASET_PRESETS: Dict[str, DatasetPreset] = {
    "sonar": DatasetPreset(shapes=("1L", "2L15", "2L25"), epochs=60),
    "wbcd": DatasetPreset(shapes=("1L", "2L10", "2L20"), epochs=30),
    "mnist": DatasetPreset(shapes=("2L50", "2L100", "2L150", "3L"), epochs=10,
                           rv_learning_rate=0.005, long=True),
    "synthetic": DatasetPreset(shapes=("1L", "2L10"), epochs=10),
}


def dataset_preset(dataset: str) -> DatasetPreset:
    try:
        return DATASET_PRESETS[dataset]
    except KeyError:
        raise ConfigError(f"unknown dataset '{dataset}'; choose from {sorted(DATASET_PRESETS)}")


def resolve_shape(shape_id: str, n_inputs: int, n_outputs: int) -> Tuple[int, ...]:
    """
    Layer widths for a shape id

    Args:
        shape_id: Preset id such as 2L15
        n_inputs: Dataset input width
        n_outputs: Dataset output width

    Returns:
        (n_inputs, *hidden, n_outputs)
    """
    if shape_id not in HIDDEN_LAYERS:
        raise ConfigError(f"unknown shape '{shape_id}'; choose from {list(HIDDEN_LAYERS)}")
    return (n_inputs,) + HIDDEN_LAYERS[shape_id] + (n_outputs,)
