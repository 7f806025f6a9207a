from setuptools import find_packages, setup

with open("README.md") as readme_file:
    readme = readme_file.read()

with open("requirements.txt") as requirements_file:
    requirements = requirements_file.read().splitlines()

setup(
    author="pointnmf",
    author_email="pointnmf@users.noreply.github.com",
    python_requires=">=3.10",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Programming Language :: Python :: 3.10",
        "Topic :: Multimedia :: Sound/Audio :: Analysis",
    ],
    description="Non-negative factorization of irregularly sampled time-frequency point sets with neural functions.",
    install_requires=requirements,
    extras_require={"test": ["pytest"]},
    long_description=readme,
    long_description_content_type="text/markdown",
    include_package_data=True,
    keywords=["nmf", "audio", "time-frequency", "source separation"],
    name="pointnmf",
    packages=find_packages(include=["pointnmf", "pointnmf.*"]),
    version="1.0.0",
    zip_safe=False,
)
