"""Smoke test for the qbf extension module.

Builds nothing itself: it locates the compiled cdylib under target/,
copies it into a temporary directory under the importable name, and
exercises the solver, the verifier, and the propagator.

Run after `cargo build --release -p qbf-py`:

    python3 python/smoke_test.py
"""

import importlib.util
import math
import pathlib
import shutil
import sys
import tempfile

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
TAU_STAR = math.pi * math.sqrt(3.0 / 8.0)


def load_module():
    candidates = [
        REPO_ROOT / "target" / profile / name
        for profile in ("release", "debug")
        for name in ("libqbf.so", "libqbf.dylib", "qbf.dll")
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("no compiled module found; run `cargo build --release -p qbf-py` first")
    tmpdir = tempfile.mkdtemp(prefix="qbf-smoke-")
    suffix = ".pyd" if built.suffix == ".dll" else ".so"
    importable = pathlib.Path(tmpdir) / f"qbf{suffix}"
    shutil.copy2(built, importable)
    spec = importlib.util.spec_from_file_location("qbf", importable)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def main():
    qbf = load_module()

    branches = qbf.solve_perfect("us13", 1.0)
    assert branches, "no perfect branches at equal couplings"
    best = branches[0]
    assert abs(best.tau_star - TAU_STAR) < 1e-9, best.tau_star
    assert best.n == (2, 1, 1, 1), best.n
    assert abs(abs(best.bz) - abs(1.0 - math.sqrt(8.0 / 3.0))) < 1e-9

    report = qbf.verify_branch(best, steps=512)
    assert report.within_tolerances, report.failures
    assert report.oracle_fidelity > 1.0 - 1e-8, report.oracle_fidelity

    cnot = qbf.solve_perfect("cnot13", 1.0)[0]
    assert abs(cnot.tau_star - best.tau_star) < 1e-12
    assert abs(cnot.bz + best.bz) < 1e-12, "bz should flip sign"
    cnot_report = qbf.verify_branch(cnot, steps=512)
    assert cnot_report.within_tolerances, cnot_report.failures

    unitary = qbf.propagator(best, best.tau_star)
    target = qbf.gate_matrix("us13")
    assert qbf.gate_fidelity(unitary, target) > 1.0 - 1e-9

    start = qbf.propagator(best, 0.0)
    identity = [[1.0 + 0.0j if i == j else 0.0j for j in range(8)] for i in range(8)]
    assert abs(qbf.gate_fidelity(start, identity) - 1.0) < 1e-12

    pert = qbf.solve_perturbative("us13", 1.02, 0.999)
    assert pert.residual_norm <= 1e-10, pert.residual_norm
    assert pert.tau_star < TAU_STAR
    assert abs(sum(s * s for s in pert.sigma) - 8.0 * (1.0 - 0.999)) < 1e-3

    assert abs(qbf.fidelity_ceiling(0.125) - 0.9946) < 5e-4
    assert qbf.fidelity_ceiling(0.0) == 1.0

    names = [name for name, _, _, _ in qbf.presets()]
    assert "ethanamide" in names and "alanine" in names

    try:
        qbf.solve_perturbative("us13", 1.2, 0.999)
    except ValueError as err:
        assert "ceiling" in str(err)
    else:
        sys.exit("unreachable fidelity should raise ValueError")

    print("smoke test passed:", best)


if __name__ == "__main__":
    main()
