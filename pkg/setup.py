import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "nilhcf._kernels",
    ["src/nilhcf/_kernels.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    # plain complex products, no C99 NaN/inf recovery path
    extra_compile_args=["-O3", "-fcx-limited-range"],
    optional=True,
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
