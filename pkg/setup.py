from setuptools import setup, find_packages

__version__ = "0.4.0"

requirements = [
    "dependency-injector>=4.0,<5.0",
    "jinja2",
    "numpy>=1.24,<2.0",
    "pydantic>=2.0,<3.0",
    "scipy>=1.10",
]

setup(
    name="sqp-bam",
    version=__version__,
    packages=find_packages(exclude=["tests", "tests.*"]),
    package_dir={"sqp": "sqp"},
    package_data={"sqp": ["templates/*.j2"]},
    install_requires=requirements,
    entry_points={"console_scripts": ["sqp = sqp.main:main"]},
    extras_require={
        "dev": [
            "black",
            "pylint",
            "bandit",
            "mypy",
            "autoflake",
            "coverage",
            "coverage-badge",
            "pytest",
            "pytest-mock",
        ]
    },
)
