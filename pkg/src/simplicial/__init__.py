"""Simplicial neural networks on coauthorship complexes."""

from .complex import INFINITY, Cochain, SimplicialComplex, cofaces, faces, insert_closure, simplicial_distance
from .ingest import CitationComplex, complex_stats, filter_corpus, parse_corpus, project_to_complex, sample_papers
from .snn import SnnModel, TrainConfig, gradients, init_model, l1_masked_loss, model_forward, train
from .spectral import (
    SparseOperator,
    apply,
    betti_number,
    coboundary_matrix,
    eigendecompose,
    fourier_transform,
    hodge_laplacian,
    inverse_fourier_transform,
    polynomial_apply,
    spectral_convolve,
)

__all__ = [
    "INFINITY", "Cochain", "SimplicialComplex", "cofaces", "faces", "insert_closure", "simplicial_distance",
    "CitationComplex", "complex_stats", "filter_corpus", "parse_corpus", "project_to_complex", "sample_papers",
    "SnnModel", "TrainConfig", "gradients", "init_model", "l1_masked_loss", "model_forward", "train",
    "SparseOperator", "apply", "betti_number", "coboundary_matrix", "eigendecompose", "fourier_transform",
    "hodge_laplacian", "inverse_fourier_transform", "polynomial_apply", "spectral_convolve",
]
