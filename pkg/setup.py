#!/usr/bin/env python3
"""
Setup script for vibench - variational inequality solver benchmark
Can be used for installation or as a pip package
"""

import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import find_packages, setup

VERSION = "0.3.0"


def read_readme():
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()


def read_requirements():
    with open("requirements.txt", "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip() and not line.startswith("#")]


# Setup for pip package
if len(sys.argv) > 1:
    setup(
        name="vibench",
        version=VERSION,
        description="Inertial projection methods for monotone variational inequalities, with a benchmark harness",
        long_description=read_readme(),
        long_description_content_type="text/markdown",
        packages=find_packages(include=["modules", "modules.*"]),
        py_modules=["vibench"],
        classifiers=[
            "Development Status :: 4 - Beta",
            "Intended Audience :: Science/Research",
            "Topic :: Scientific/Engineering :: Mathematics",
            "License :: OSI Approved :: MIT License",
            "Programming Language :: Python :: 3",
            "Programming Language :: Python :: 3.8",
            "Programming Language :: Python :: 3.9",
            "Programming Language :: Python :: 3.10",
            "Programming Language :: Python :: 3.11",
            "Programming Language :: Python :: 3.12",
        ],
        python_requires=">=3.8",
        install_requires=read_requirements(),
        extras_require={"test": ["pytest>=7.0"]},
        entry_points={
            "console_scripts": [
                "vibench=vibench:main",
            ],
        },
        include_package_data=True,
        package_data={
            "": ["experiment.example.yml", "README.md", "configs/*"],
        },
        keywords="variational inequality projection method extragradient line search benchmark",
        zip_safe=False,
    )
    sys.exit(0)


def install_dependencies():
    """Install Python dependencies."""
    print("Installing Python dependencies...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✓ Dependencies installed successfully")
        return True
    except subprocess.CalledProcessError as e:
        print(f"✗ Failed to install dependencies: {e}")
        return False


def create_config():
    """Create experiment.yml from the example."""
    config_file = Path("experiment.yml")
    example_file = Path("experiment.example.yml")

    if config_file.exists():
        print("✓ Experiment file already exists")
        return True

    if not example_file.exists():
        print("✗ Example experiment file not found")
        return False

    try:
        shutil.copy(example_file, config_file)
        print("✓ Created experiment.yml from example")
        return True
    except Exception as e:
        print(f"✗ Failed to create experiment file: {e}")
        return False


def smoke_test():
    """Import the modules and parse the experiment file."""
    try:
        from modules.config import load_config
        from modules.solvers import SOLVERS
        print(f"✓ Modules imported ({len(SOLVERS)} methods available)")

        try:
            cfg = load_config("experiment.yml")
            print(f"✓ Experiment loaded: {cfg.problem.family}, {len(cfg.methods)} methods")
        except Exception as e:
            print(f"⚠ Experiment file has issues: {e}")
        return True

    except ImportError as e:
        print(f"✗ Module import failed: {e}")
        return False


def main():
    """Main setup function."""
    print("vibench Setup")
    print("=" * 50)

    if sys.version_info < (3, 8):
        print("✗ Python 3.8 or higher is required")
        sys.exit(1)

    print(f"✓ Python {sys.version.split()[0]} detected")

    success = install_dependencies()
    success = create_config() and success
    success = smoke_test() and success

    print("\n" + "=" * 50)
    if success:
        print("✓ Setup completed successfully!")
        print("\nNext steps:")
        print("1. Edit experiment.yml (or pick one from configs/)")
        print("2. Run it: python vibench.py run --config experiment.yml")
        print("3. Check the acceptance criteria: python vibench.py check")
    else:
        print("⚠ Setup completed with warnings")


if __name__ == "__main__":
    main()
