"""Generalized-cone curvature verification toolkit (python bindings)."""

try:
    # Installed layout: the extension lives inside the package.
    from ._core import *  # noqa: F401,F403
    from ._core import __version__  # noqa: F401
except ImportError:
    # Development layout: the extension sits on PYTHONPATH next to the build.
    from _core import *  # noqa: F401,F403
    from _core import __version__  # noqa: F401
