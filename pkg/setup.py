from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup

setup(
    ext_modules=[
        Pybind11Extension(
            "chemtune._fast",
            ["src/chemtune/_fast.cpp"],
            cxx_std=17,
            extra_compile_args=["-O2"],
            optional=True,
        )
    ],
    cmdclass={"build_ext": build_ext},
)
