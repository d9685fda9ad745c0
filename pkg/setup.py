from setuptools import find_packages, setup

setup(
    name="cdn-energy-sim",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "examples*"]),
    install_requires=[
        "click>=8.1.7",
        "python-dotenv>=1.0.0",
        "python-json-logger>=2.0.7",
        "numpy>=1.26.0",
    ],
    extras_require={
        "dev": [
            "pytest>=8.0.0",
            "pytest-mock>=3.12.0",
            "scipy>=1.11.0",
            "pre-commit>=3.6.0",
            "black>=24.1.1",
            "isort>=5.13.2",
            "flake8>=7.0.0",
            "flake8-docstrings>=1.7.0",
            "mypy>=1.8.0",
            "tox>=4.15.0",
        ],
    },
    python_requires=">=3.10",
    entry_points={
        "console_scripts": [
            "cdn-energy-sim=cdn_energy_sim.cli:main",
        ],
    },
)
