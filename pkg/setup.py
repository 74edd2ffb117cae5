import importlib.util
import os

from setuptools import setup, find_packages

here = os.path.dirname(os.path.abspath(__file__))
spec = importlib.util.spec_from_file_location(
    'hier_deconv', os.path.join(here, 'src', 'hier_deconv', '__init__.py')
)
about = importlib.util.module_from_spec(spec)
spec.loader.exec_module(about)

install_requires = [
    'marshmallow>=3.13',
    'numpy>=1.17',
    'scikit-learn>=0.24',
]


setup_requires = [
    'pytest_runner',
]

tests_require = install_requires + [
    'coverage',
    'flake8',
    'pytest',
    'pytest-cov',
]

docs_require = [
    'Sphinx',
    'sphinx_autodoc_typehints',
    'sphinx_rtd_theme',
]


setup(
    name='hier_deconv',
    version=about.__version__,
    description='Hierarchically sparse blind deconvolution and demixing '
                'with HiHTP',
    classifiers=[
        "Development Status :: 4 - Beta",
        "License :: OSI Approved :: Apache Software License",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    keywords='compressed sensing blind deconvolution hierarchical sparsity',
    license="Apache 2.0",
    packages=find_packages('src'),
    package_dir={'': 'src'},
    python_requires='>=3.8',
    test_suite="tests",
    include_package_data=True,
    install_requires=install_requires,
    tests_require=tests_require,
    setup_requires=setup_requires,
    extras_require={'docs': docs_require, 'test': tests_require},
    entry_points={
        'console_scripts': ['hier-deconv = hier_deconv.cli:main'],
    },
)
