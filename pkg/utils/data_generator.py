"""
Training Data Generator - Random smooth periodic solutions sampled on the grid

Each training case draws b_hat_eta ~ U(-1, 1) for eta = 0..(N-1)//2 and sets

    b_0 = b_hat_0,   b_{+-eta} = eta^{-p} b_hat_eta   (eta >= 1)

so larger p gives smoother initial data. Cases use independent PCG64 streams
spawned from one SeedSequence: case tau always receives child tau, no matter
how many cases are requested.
"""

import logging
from typing import List, Optional

import numpy as np

from models.problem import FourierData, PdeProblem, TrainingSet
from solvers.exact_solution import sample_grid_solution

logger = logging.getLogger(__name__)

VALID_DECAY_RATES = (0, 2, 4, 8)


def case_generators(seed: int, count: int) -> List[np.random.Generator]:
    """Independent generators for cases 0..count-1."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]


def random_fourier_data(
    rng: np.random.Generator, max_mode: int, p: int
) -> FourierData:
    """Draw one real-valued coefficient set with algebraic decay eta^{-p}."""
    b_hat = rng.uniform(-1.0, 1.0, size=max_mode + 1)
    amplitude = b_hat.copy()
    if max_mode >= 1:
        eta = np.arange(1, max_mode + 1, dtype=float)
        amplitude[1:] = b_hat[1:] / eta**p
    return FourierData.from_nonnegative(amplitude)


def generate_training_set(
    problem: PdeProblem,
    N: int,
    h_t: float,
    s: int,
    Q: int,
    T: int,
    p: int,
    seed: int,
    max_mode: Optional[int] = None,
) -> TrainingSet:
    """
    Sample T exact trajectories at levels 0..s-1+Q.

    ``max_mode`` caps the highest mode drawn; by default it is (N-1)//2, the
    highest mode the grid resolves without aliasing. max_mode=0 gives
    constant data.
    """
    if p not in VALID_DECAY_RATES:
        raise ValueError(f"Decay rate p must be one of {VALID_DECAY_RATES}, got: {p}")
    if T < 1 or Q < 1 or s < 1:
        raise ValueError(f"T, Q and s must be positive, got T={T}, Q={Q}, s={s}")
    if not h_t > 0:
        raise ValueError(f"Timestep must be positive, got: {h_t}")
    top = (N - 1) // 2 if max_mode is None else int(max_mode)
    if not 0 <= top <= (N - 1) // 2:
        raise ValueError(f"max_mode must be in 0..{(N - 1) // 2}, got: {max_mode}")

    levels = s + Q
    cases = np.empty((T, N + 1, levels))
    fourier = []
    for tau, rng in enumerate(case_generators(seed, T)):
        data = random_fourier_data(rng, top, p)
        cases[tau] = sample_grid_solution(problem, data, N, h_t, levels)
        fourier.append(data)

    logger.debug("Generated %d training cases (N=%d, p=%d, seed=%d, modes<=%d)", T, N, p, seed, top)
    return TrainingSet(
        cases=cases,
        steps=s,
        horizon=Q,
        h_t=h_t,
        decay_rate=p,
        seed=seed,
        fourier=fourier,
    )
