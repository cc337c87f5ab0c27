#!/usr/bin/env python3
"""Installation script for canard-tool."""

from pathlib import Path
import subprocess
import sys


def main():
    root = Path(__file__).parent

    print("Installing canard-tool...")

    print("Installing Python dependencies...")
    result = subprocess.run(
        [sys.executable, "-m", "pip", "install", "-r", "requirements.txt"],
        cwd=root,
        capture_output=True,
        text=True
    )

    if result.returncode != 0:
        print(f"Failed to install dependencies:\n{result.stderr}")
        return 1

    print("Dependencies installed")

    for script in (root / "scripts").glob("*.py"):
        script.chmod(0o755)

    print("Installation complete.")
    print(f"\nLocation: {root}")
    print("\nNext steps:")
    print("   scripts/canard-tool.py models")
    print("   scripts/canard-tool.py analyze --model vdp --eps 0.05 --bracket -0.2 0.2")

    return 0


if __name__ == "__main__":
    if len(sys.argv) > 1:
        # Invoked by a build backend (pip install); metadata lives in pyproject.toml.
        from setuptools import setup
        setup()
    else:
        sys.exit(main())
