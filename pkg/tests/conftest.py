import numpy as np
import pytest

from drem_mrac import PlantModel, ReferenceModel

# aircraft benchmark, transcribed independently of the bundled config
A_AC = np.array([[0.0, 0.0, 1.0, 0.0],
                 [0.049, -0.083, 0.0, -1.0],
                 [0.0, -4.55, -1.70, 0.172],
                 [0.0, 3.382, -0.065, -0.089]])
B_AC = np.array([[0.0, 0.0],
                 [0.0, 0.012],
                 [27.276, 0.576],
                 [0.395, -1.362]])
A_REF = np.array([[0.0, 0.0, 1.0, 0.0],
                  [0.048, -0.082, 0.0, -0.976],
                  [-19.53, -5.219, -10.849, 1.822],
                  [-0.204, 3.22, -0.145, -2.961]])
B_REF = np.array([[0.0, 0.0],
                  [0.0, 0.029],
                  [19.441, 5.317],
                  [0.348, -3.379]])
X0 = np.array([-1.0, -0.5, 0.0, 0.0])
BENCH_SCALE = 2000.0

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def plant():
    return PlantModel(A_AC, B_AC, X0)


@pytest.fixture(scope="session")
def ref():
    return ReferenceModel(A_REF, B_REF, X0)


def random_matched_pair(rng, n, m):
    """Random Hurwitz reference model and a plant that matches it exactly."""
    while True:
        M = rng.normal(size=(n, n))
        A_ref = M - (np.abs(np.linalg.eigvals(M)).max() + 0.5) * np.eye(n)
        B = rng.normal(size=(n, m))
        K_x = rng.normal(size=(m, n))
        K_r = rng.normal(size=(m, m)) + 2 * np.eye(m)
        A = A_ref - B @ K_x
        try:
            p = PlantModel(A, B, rng.normal(size=n))
            r = ReferenceModel(A_ref, B @ K_r, rng.normal(size=n))
        except ValueError:
            continue
        return p, r, K_x, K_r


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
