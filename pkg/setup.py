import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("STREAMSEANET_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("streamseanet._kernels", ["src/streamseanet/_kernels.pyx"],
                       include_dirs=[np.get_include()], extra_compile_args=["-O3", "-march=native", "-ffp-contract=off"])],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
