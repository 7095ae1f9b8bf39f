"""Monte Carlo laboratory for the CLT of symmetric exchangeable arrays."""

from exchclt.errors import ConfigError, InvalidArgument

__version__ = "0.1.0"

__all__ = ["ConfigError", "InvalidArgument", "__version__"]
