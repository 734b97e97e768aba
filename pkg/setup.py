from setuptools import find_packages, setup

from splitdenoise import __version__

install_requires = open("./requirements.txt").read().strip().split("\n")
dev_requires = open("./dev-requirements.txt").read().strip().split("\n")

setup(
    name="splitdenoise",
    version=__version__,
    description="Split inference with client-side denoising of locally privatized token embeddings",
    long_description=open("./README.md").read(),
    long_description_content_type="text/markdown",
    python_requires=">=3.8, <4",
    packages=find_packages(include=["splitdenoise", "splitdenoise.*"]),
    license="Apache License 2.0",
    install_requires=install_requires,
    extras_require={"dev": dev_requires},
    entry_points={"console_scripts": ["snd = splitdenoise.harness.cli:main"]},
    classifiers=[
        "License :: OSI Approved :: Apache Software License",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Artificial Intelligence",
        "Topic :: Security",
    ],
)
