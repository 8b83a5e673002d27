"""Setup for the path projection package."""

from setuptools import setup

# Read README.md for the long description
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setup(
    name="path-projection",
    version="1.0.0",
    description="Project robot navigation intent onto the ground",
    long_description=long_description,
    long_description_content_type="text/markdown",
    author="path-projection contributors",
    license="MIT",
    packages=["path_projection"],
    package_data={"path_projection": ["data/*.yaml", "data/*.json"]},
    install_requires=[
        "aiohttp>=3.8.0",
        "attrs>=22.2.0",
        "multidict>=4.0.0",
        "yarl>=1.0.0",
        "typing-extensions>=4.0.0",  # NotRequired on Python 3.10
        "voluptuous>=0.13.0",
        "PyYAML>=6.0",
        "numpy>=1.24",
        "scipy>=1.10",
        "Pillow>=10.0",
    ],
    entry_points={
        "console_scripts": ["path-projection=path_projection.cli:main"],
    },
    python_requires=">=3.10",
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Visualization",
    ],
    keywords=["robotics", "navigation", "projector", "augmented-reality"],
)
