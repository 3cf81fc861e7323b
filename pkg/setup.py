#!/usr/bin/env python3
"""
Setup script for ACR Rating Models
Installs the flat modules and the acr-models console script.
"""

from pathlib import Path

from setuptools import setup


def read_requirements():
    """Runtime requirements from requirements.txt (test tools excluded)"""
    requirements = []
    for line in Path(__file__).with_name("requirements.txt").read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.split("==")[0] in ("pytest", "hypothesis"):
            continue
        requirements.append(line)
    return requirements


setup(
    name="acr-models",
    version="1.0.0",
    description="Parametric and maximum entropy models of ACR rating distributions",
    long_description=Path(__file__).with_name("README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    python_requires=">=3.9",
    py_modules=[
        "analysis",
        "charts",
        "commands",
        "config",
        "dataset_loader",
        "errors",
        "fit",
        "gof",
        "latent",
        "maxent",
        "models",
        "pmf_core",
        "predict",
        "run_acr",
    ],
    install_requires=read_requirements(),
    extras_require={"test": ["pytest==8.2.0", "hypothesis==6.100.0"]},
    entry_points={"console_scripts": ["acr-models=run_acr:cli"]},
)
