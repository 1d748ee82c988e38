#!/usr/bin/env python3
"""
Master verification script that runs every acceptance check sequentially.
"""

import sys
import subprocess
import logging
from pathlib import Path

# Configure logging
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s')
logger = logging.getLogger(__name__)

CLI = Path(__file__).parent / "run_fedocheck.py"


def run_check(args, reports_dir: Path, label: str) -> bool:
    """Runs one fedocheck command; returns True when it exited with 0."""
    workspace_root = Path(__file__).resolve().parent.parent
    cmd = [sys.executable, str(CLI)] + args + ["--out", str(reports_dir / f"{label}.json")]

    logger.info(f"Running {label}...")
    result = subprocess.run(cmd, cwd=workspace_root, text=True)
    if result.returncode == 0:
        logger.info(f"✓ {label} passed.")
        return True
    logger.error(f"✗ {label} failed with exit code {result.returncode}.")
    return False


def main():
    reports_dir = Path("reports")
    reports_dir.mkdir(exist_ok=True)

    # (label, arguments) pairs; dimension scans first, then the identity suites
    checks = [
        ("dims_p0_w-4_dim2", ["dims", "--p", "0", "--weight", "-4", "--dim", "2"]),
        ("dims_p0_w-4_dim4", ["dims", "--p", "0", "--weight", "-4", "--dim", "4"]),
        ("identities_p0_w-4_dim2", ["identities", "--p", "0", "--weight", "-4", "--dim", "2"]),
        ("identities_p0_w-4_dim4", ["identities", "--p", "0", "--weight", "-4", "--dim", "4"]),
        ("identities_p2_w-2_dim4", ["identities", "--p", "2", "--weight", "-2", "--dim", "4"]),
        ("identities_p2_w-2_dim6", ["identities", "--p", "2", "--weight", "-2", "--dim", "6"]),
        ("identities_p1_w-2_dim2", ["identities", "--p", "1", "--weight", "-2", "--dim", "2"]),
        ("identities_p2_w0_dim2", ["identities", "--p", "2", "--weight", "0", "--dim", "2"]),
        ("scalar_dim2", ["verify", "--suite", "scalar", "--dim", "2"]),
        ("scalar_dim4", ["verify", "--suite", "scalar", "--dim", "4"]),
        ("two_form_dim4", ["verify", "--suite", "two-form", "--dim", "4"]),
        ("two_form_dim6", ["verify", "--suite", "two-form", "--dim", "6"]),
        ("chern_dim4", ["verify", "--suite", "chern", "--dim", "4"]),
        ("chern_dim6", ["verify", "--suite", "chern", "--dim", "6"]),
        ("main_theorem_dim8", ["verify", "--suite", "main-theorem", "--dim", "8", "--trials", "3"]),
        ("bianchi_dim4", ["verify", "--suite", "bianchi", "--dim", "4"]),
        ("divergence_dim6", ["verify", "--suite", "divergence", "--dim", "6"]),
        ("divergence_dim8", ["verify", "--suite", "divergence", "--dim", "8", "--trials", "2"]),
        ("homogeneity_dim8", ["verify", "--suite", "homogeneity", "--dim", "8", "--trials", "2"]),
        ("equivariance_dim6", ["verify", "--suite", "equivariance", "--dim", "6"]),
        ("sft", ["verify", "--suite", "sft"]),
        ("reduce_eq2_dim2", ["reduce", "eq2", "--dim", "2"]),
        ("reduce_eq4_dim4", ["reduce", "eq4", "--dim", "4"]),
    ]

    print("========================================================")
    print("STARTING FULL VERIFICATION")
    print("========================================================")

    failed = [label for label, args in checks if not run_check(args, reports_dir, label)]

    print("========================================================")
    if failed:
        print(f"{len(failed)} CHECK(S) FAILED: {', '.join(failed)}")
        print("========================================================")
        sys.exit(1)
    print("ALL CHECKS PASSED")
    print("========================================================")


if __name__ == "__main__":
    main()
