"""Dense symmetric tensor algebra and K operators."""

from chaoslab.core.operators import KOperator, k_operator_norms
from chaoslab.core.tensors import HilbertSpec, SymmetricKernel, contract_r, inner, symmetrize
