import numpy as np

GROUP_SEPARATOR = " "


def derive_seeds(seed: int, count: int) -> list[int]:
    """Derives independent child seeds from a single seed.

    :param seed: the parent seed
    :param count: the number of child seeds
    :return: one 64 bit seed per child, stable for a given (seed, count)
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint64)[0]) for child in children]


def split_shots(shots: int, workers: int) -> list[int]:
    """Splits shots across workers as evenly as possible, earlier workers taking the remainder.

    :param shots: the total number of shots
    :param workers: the number of workers
    :return: the shots per worker, zero-sized parts removed
    """
    if workers < 1:
        raise ValueError(f"workers must be at least 1, got {workers}")
    base, extra = divmod(shots, workers)
    parts = [base + (1 if i < extra else 0) for i in range(workers)]
    return [part for part in parts if part > 0]
