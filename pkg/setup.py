from setuptools import setup
from setuptools_rust import Binding, RustExtension

setup(
    rust_extensions=[
        RustExtension(
            "zkfl._core",
            path="rust/Cargo.toml",
            binding=Binding.PyO3,
            optional=True,
            debug=False,
        )
    ],
    zip_safe=False,
)
