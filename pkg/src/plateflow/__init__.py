"""plateflow: modal Galerkin simulation of a cavity flow coupled to an elastic plate."""

__version__ = "0.1.0"
