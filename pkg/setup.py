import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SHADOWPAIR_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "shadowpair._core",
                    ["src/shadowpair/_core.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    optional=True,
                ),
                # glibc vector math; skipped where libmvec is unavailable
                Extension(
                    "shadowpair._density",
                    ["src/shadowpair/_density.pyx"],
                    extra_compile_args=["-O3", "-ffast-math"],
                    extra_link_args=["-lmvec"],
                    optional=True,
                ),
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
