import numpy as np
import pytest

from fiberloop.qstate import QubitChannel, TwoQubitState


def random_state(seed: int) -> TwoQubitState:
    """Random full-rank density matrix rho = A A^dag / Tr."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return TwoQubitState(rho / np.trace(rho).real)


def random_channel(seed: int, n_kraus: int = 3, survival: float = 1.0) -> QubitChannel:
    """Random CPTP channel, optionally scaled to a trace-nonincreasing one."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    ops = [rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(n_kraus)]
    total = sum(k.conj().T @ k for k in ops)
    w, v = np.linalg.eigh(total)
    inv_sqrt = v @ np.diag(1.0 / np.sqrt(w)) @ v.conj().T
    return QubitChannel(tuple(np.sqrt(survival) * k @ inv_sqrt for k in ops))


def trace_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.linalg.eigvalsh(a - b)).sum())


_CRITERIA = (
    ("C1", "test_c1", "Table I insertion-loss regression (+-0.01 dB)"),
    ("C2", "test_c2", "Table I buffer times (+-3%)"),
    ("C3", "test_c3", "leak/retrieve outcomes (6/6)"),
    ("C4", "test_c4", "tomography closed loop (trace distance <= 0.01)"),
    ("C5", "test_c5", "chi roundtrip from joint-state data (<= 0.01)"),
    ("C6", "test_c6", "calibrated-profile regime fidelities"),
    ("C7", "test_c7", "divider buffer times and ghost"),
    ("C8", "test_c8", "determinism: byte-identical reruns"),
    ("C9", "test_c9", "invariant suite (1000 randomized pairs)"),
)


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance: marks a test as part of the acceptance gate"
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes: dict[str, list[str]] = {}
    for status in ("passed", "failed", "error", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(status, []):
            if getattr(rep, "when", "call") != "call" and status != "error":
                continue
            name = rep.nodeid.rsplit("::", 1)[-1]
            for code, prefix, _ in _CRITERIA:
                if name.startswith(prefix):
                    outcomes.setdefault(code, []).append(status)
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for code, _, title in _CRITERIA:
        got = outcomes.get(code)
        if not got:
            continue
        if all(s == "passed" for s in got):
            verdict = "PASS"
        elif any(s in ("failed", "error", "xpassed") for s in got):
            verdict = "FAIL"
        else:
            verdict = "FAIL (expected: known model limitation, see test notes)"
        terminalreporter.write_line(f"ACCEPTANCE {code} {title}: {verdict}")
