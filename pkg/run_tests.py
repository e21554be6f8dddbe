#!/usr/bin/env python3
import pytest
import sys

def main():
    """Run the fast unit tests."""
    print("Starting unit tests...")

    result = pytest.main([
        "tests",
        "-m", "not slow",
        "-v",
        "--tb=short",
    ])

    print(f"\nTest run completed with exit code: {result}")
    return result

if __name__ == "__main__":
    sys.exit(main())
