import numpy as np
import pytest

from mra_lab import make_group


@pytest.fixture(scope="session")
def builtin_groups():
    """One instance per built-in family at small dimension."""
    return {
        "trivial": make_group("trivial", 3),
        "sign_flip": make_group("sign_flip", 2),
        "diag_signs": make_group("diag_signs", 3),
        "cyclic": make_group("cyclic", 4),
        "permutations": make_group("permutations", 3),
    }


def random_unit(rng: np.random.Generator, d: int) -> np.ndarray:
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)
