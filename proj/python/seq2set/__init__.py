"""Sequence-to-set fine-grained entity typing toolkit."""

from ._seq2set import *  # noqa: F401,F403
from ._seq2set import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
