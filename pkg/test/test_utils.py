import pytest

from arc.utils import derive_seeds, split_shots


def test_derive_seeds():
    seeds = derive_seeds(seed=7, count=3)
    assert len(seeds) == 3
    assert len(set(seeds)) == 3
    assert seeds == derive_seeds(seed=7, count=3)
    assert seeds != derive_seeds(seed=8, count=3)

    # children are keyed by their index, so asking for more keeps the earlier ones
    assert derive_seeds(seed=7, count=5)[:3] == seeds


def test_split_shots():
    assert split_shots(10, 3) == [4, 3, 3]
    assert split_shots(9, 3) == [3, 3, 3]
    assert split_shots(2, 4) == [1, 1]
    assert split_shots(5, 1) == [5]


def test_split_shots_needs_a_worker():
    with pytest.raises(ValueError) as excinfo:
        split_shots(10, 0)
    assert "workers must be at least 1" in str(excinfo.value)
