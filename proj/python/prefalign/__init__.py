"""Inference-time preference alignment: demonstration retrieval, in-context
prompting, contrastive candidate scoring and evaluation, backed by the C++
core."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
