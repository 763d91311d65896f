"""Simulator for signing NEQR quantum images with a QFT, a keyed quantum
one-time pad and a permutation issued by a blind arbiter."""

from .errors import DomainError, MalformedNeqrState, MalformedPermutation, PgmFormatError
from .neqr import GrayscaleImage, NeqrLayout, decode_exact, encode, retrieve_sampled
from .protocol import SessionConfig, Status, Reason, run_session
from .qsim import StateVector, basis_state, fidelity

__version__ = "0.1.0"
