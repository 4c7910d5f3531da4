import setuptools

with open("README.md", "r") as fh:
    long_description = fh.read()

setuptools.setup(
    name="multipathga",
    version="0.1.0",
    author="multipathga contributors",
    description="Multipath channel delay and attenuation estimation with a genetic algorithm",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    install_requires=[
        "numpy>=1.17",
        "scipy>=1.4",
    ],
    entry_points={
        "console_scripts": ["multipathga=multipathga.harness_cli:main"],
    },
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",

        "License :: OSI Approved :: Apache Software License",

        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Mathematics",

        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",

        "Operating System :: OS Independent",

        "Programming Language :: Python :: 3.7",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",

        "Natural Language :: English",
    ],
    python_requires='>=3.7',
)
