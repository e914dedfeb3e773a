"""Signals to graphs: windowing, standardisation, kNN topology, noise, datasets."""
from .csvio import iter_csv_rows, load_csv_dataset, read_csv_columns, write_csv_dataset
from .dataset import Split, records_to_samples, stratified_split
from .graph import (
    GraphSample,
    PreprocessConfig,
    build_knn_graph,
    validate_graph,
    window_nodes,
    window_to_sample,
)
from .signals import DatasetError, SignalRecord, inject_snr_noise, segment_signal, zscore
from .synthetic import generate_synthetic_dataset

__all__ = [
    "DatasetError",
    "GraphSample",
    "PreprocessConfig",
    "SignalRecord",
    "Split",
    "build_knn_graph",
    "generate_synthetic_dataset",
    "inject_snr_noise",
    "iter_csv_rows",
    "load_csv_dataset",
    "read_csv_columns",
    "records_to_samples",
    "segment_signal",
    "stratified_split",
    "validate_graph",
    "window_nodes",
    "window_to_sample",
    "write_csv_dataset",
    "zscore",
]
