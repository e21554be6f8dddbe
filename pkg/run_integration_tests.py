#!/usr/bin/env python3
import sys
import traceback

import pytest

def run_tests():
    """Run the end-to-end pipeline tests with detailed output."""
    print("\n=== Starting Integration Tests ===\n")
    result = pytest.main([
        "tests",
        "-m", "slow",
        "-v",
        "-s",
        "--tb=short",
        "--show-capture=all",
    ])
    print("\n=== Test Run Complete ===\n")
    return int(result)

if __name__ == '__main__':
    try:
        print("\nPython version:", sys.version)
        print("Platform:", sys.platform)
        print("Running from:", sys.executable)
        print()
        sys.exit(run_tests())
    except KeyboardInterrupt:
        print("\nTest run interrupted by user")
        sys.exit(1)
    except Exception as e:
        print("\nUnexpected error:", e)
        print(traceback.format_exc())
        sys.exit(1)
