"""Backend selection for the hot loops.

The compiled extension is used when importable. Setting the environment
variable ``BACKUPSCHED_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from backupsched import _pykernels

python_backend = _pykernels

compiled_backend = None
if not os.environ.get("BACKUPSCHED_PURE_PYTHON"):
    try:
        from backupsched import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

_impl = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

gaussian_sum = _impl.gaussian_sum
exclude = _impl.exclude
dilated_mask = _impl.dilated_mask
count_active_many = _impl.count_active_many
