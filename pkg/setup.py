from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [line for line in fh.read().splitlines() if line and not line.startswith("#")]

VERSION = "0.1.0"

setup(
    name="bipolarqtm",
    version=VERSION,
    description="Bipolar counter-propagating wavepacket decomposition for 1D quantum scattering",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords="quantum trajectories, wavepacket, scattering, tunneling, bipolar decomposition, cli",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    include_package_data=True,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Physics",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.10",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "bipolarqtm=bipolarqtm.cli:app",
        ],
    },
    extras_require={
        "dev": [
            "pytest>=7.0.0",
            "build", # For building the package
            "twine", # For uploading the package
        ],
    },
)
