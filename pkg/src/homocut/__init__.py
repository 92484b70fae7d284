"""Homology-constrained minimal cuts and maximal flows on triangulated
manifolds-with-boundary, with the discrete max-flow/min-cut machinery and
the packing-graph discretization experiment."""

from .mesh import SimplicialMesh, MetricSpec, MeshError, build_mesh

__all__ = [
    "SimplicialMesh",
    "MetricSpec",
    "MeshError",
    "build_mesh",
]

__version__ = "0.1.0"
