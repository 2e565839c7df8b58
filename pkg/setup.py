# -*- coding: utf-8 -*-
from pathlib import Path
from setuptools import setup, find_packages

requirements_file_path = Path(__file__).parent / "requirements.txt"
with open(requirements_file_path) as file:
    install_requires = file.readlines()

with open("README.md", "r") as f:
    long_description = f.read()

setup(
    name="two-stage-apm",
    version="0.0.1",
    description="Adaptive partition-based solvers for two-stage stochastic linear programs with fixed recourse",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={
        "two_stage_apm.options": ["*.yaml"],
        "two_stage_apm.problems": ["*.json", "*.md"],
    },
    include_package_data=True,
    python_requires=">=3.9",
    install_requires=install_requires,
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["apm=two_stage_apm.cli:main"]},
)
