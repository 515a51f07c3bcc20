"""Multi-operator drive-test analysis and client-side data-rate prediction.

Submodules:
  trace     canonical drive-trace model, CSV parsing, validation, joining
  synth     synthetic trace and benchmark dataset generators
  geogrid   geospatial connectivity maps with incremental cell statistics
  selection operator comparison and selection statistics
  learn     regression learners (linear, tree, forest, model tree)
  evaluate  metrics, cross-validation, importance, indicator impact
  cmpredict connectivity-map-based feature replacement studies
  cli       command-line entry points
"""

__version__ = "0.1.0"

from . import errors, trace

__all__ = ["errors", "trace", "__version__"]

# numpy/numba-backed submodules import lazily so that `import drivecast`
# stays cheap for tools that only need trace parsing.
_LAZY = ("synth", "geogrid", "selection", "learn", "evaluate", "cmpredict",
         "cli")


def __getattr__(name):
    if name in _LAZY:
        import importlib
        module = importlib.import_module(f".{name}", __name__)
        globals()[name] = module
        return module
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
