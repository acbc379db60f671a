"""Build script: compiles the optional Cython gate kernels.

The package is pure Python plus one optional extension
(``hamlearn.nn._gates_cy``) holding the fused LSTM gate updates.  If
Cython or a C compiler is unavailable the build falls back to the NumPy
implementation selected at import time in ``hamlearn.nn.kernels``.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Skip the extension (with a warning) when compilation fails."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing entirely
            print(f"WARNING: skipping Cython kernels ({exc}); "
                  "falling back to the NumPy implementation")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"WARNING: could not compile {ext.name} ({exc}); "
                  "falling back to the NumPy implementation")


def extension_modules():
    try:
        import numpy as np
        from setuptools import Extension
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: Cython/NumPy unavailable at build time ({exc}); "
              "building without compiled kernels")
        return []
    ext = Extension(
        "hamlearn.nn._gates_cy",
        ["src/hamlearn/nn/_gates_cy.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extension_modules(), cmdclass={"build_ext": OptionalBuildExt})
