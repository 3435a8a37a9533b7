from .run import ExperimentRunListSerializer, ExperimentRunDetailSerializer

__all__ = [
    'ExperimentRunListSerializer',
    'ExperimentRunDetailSerializer',
]
