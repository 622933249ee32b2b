"""circlab: simulation and design-verification workbench for an actively
modulated, delay-based four-port microwave circulator."""

from . import design, floquet, lattice, noise, transient  # noqa: F401

__version__ = "0.1.0"
