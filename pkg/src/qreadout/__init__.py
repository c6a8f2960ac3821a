"""Reading turbulence statistics out of amplitude-encoded velocity fields.

Modules:

- ``sim``: real statevector simulator, circuits, gradients, two-qubit metrics
- ``circuits``: ansatz families, Hadamard tests, twin-copy and cubic-sum circuits
- ``observables``: structured observables and their exact outcome distributions
- ``encoding``: field normalisation and ansatz training
- ``estimators``: exact and shot-sampled field sums
- ``stats``: central moments, structure functions, classical oracle
- ``burgers``: forced Burgers solver
- ``dea``: Jacobian rank analysis
- ``pipeline`` / ``cli``: end-to-end runs

The hot loops live in ``_kernels`` with numba and numpy implementations;
``QREADOUT_BACKEND=numpy`` forces the pure numpy path.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source checkout
    __version__ = "0.1.0"
