"""Hot-loop kernels with backend selection at import time.

The compiled Cython extension is preferred; the pure-numpy reference is the
fallback. Set REFEEDNET_KERNELS=python to force the fallback (used by the
benchmark and for debugging).
"""

import os

from . import _reference

if os.environ.get("REFEEDNET_KERNELS", "").lower() == "python":
    _impl = _reference
    IMPL = "python"
else:
    try:
        from . import _native as _impl
        IMPL = "cython"
    except ImportError:
        _impl = _reference
        IMPL = "python"

conv2d_forward = _impl.conv2d_forward
conv2d_backward = _impl.conv2d_backward
maxpool2d_forward = _impl.maxpool2d_forward
maxpool2d_backward = _impl.maxpool2d_backward
