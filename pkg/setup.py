#!/usr/bin/env python3
"""
Setup script for the graph-adaptive dimensionality reduction toolkit
"""

from setuptools import setup, find_packages

# Read the README file
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

DEV_REQUIREMENTS = {"pytest", "pytest-cov", "black", "flake8"}

# Read requirements
with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [
        line.strip() for line in fh
        if line.strip() and not line.startswith("#")
        and line.split(">=")[0].strip() not in DEV_REQUIREMENTS
    ]

setup(
    name="grad-dr",
    version="1.0.0",
    author="grad-dr developers",
    description="Graph-adaptive dimensionality reduction: PCA, kernel PCA on graphs, "
                "multi-kernel embeddings and local nonlinear embeddings",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
    ],
    python_requires=">=3.8",
    install_requires=requirements,
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "pytest-cov>=4.1.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "grad-dr=modules.cli:main",
        ],
    },
    include_package_data=True,
    zip_safe=False,
)
