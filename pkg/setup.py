import setuptools

with open("README.md", "r", encoding='utf-8') as fh:
    long_description = fh.read()

setuptools.setup(
    name="conegeom",
    version="0.1",
    description="Numerical checks of affine invariants of convex bodies: L_p affine surface areas, "
                "cone measures and centroid bodies.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=['tests', 'tests.*']),
    install_requires=[
        'numpy>=1.19.4', 'scipy>=1.7', 'mpmath>=1.2', 'Jinja2>=3.1.2', 'tqdm>=4.56.1',
        'pandas>=1.3.5',
        'pyyaml',
    ],
    package_data={'conegeom': ['defaults.yaml', 'report/*.j2']},
    entry_points={'console_scripts': ['conegeom = conegeom.eval:cli']},
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
    ],
    include_package_data=True,
)
