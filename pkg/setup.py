from setuptools import setup

with open("README.md") as f:
    readme = f.read()

with open("cpsis/__init__.py") as f:
    for line in f:
        if line.startswith("__version__"):
            version = line.split('"')[1]

setup(
    name="cpsis",
    description="compact pairwise SIS epidemic models on heterogeneous networks",
    long_description=readme,
    long_description_content_type="text/markdown",
    version=version,
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    license="MIT",
    packages=["cpsis", "cpsis.tests"],
    python_requires=">=3.7",
    setup_requires=["setuptools>=38.6.0"],
    install_requires=["numpy>=1.17"],
    entry_points={"console_scripts": ["cpsis = cpsis.cli:main"]},
)
