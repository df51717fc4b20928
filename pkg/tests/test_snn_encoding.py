import numpy as np
import pytest
import torch

from neurosub.errors import DomainError
from neurosub.snn import poisson_encode, ttfs_encode


def test_poisson_zero_intensity_never_fires():
    img = np.zeros((4, 4))
    train = poisson_encode(img, max_rate=1.0, steps=200, seed=0)
    assert train.data.sum() == 0


def test_poisson_full_intensity_full_rate_fires_every_step():
    img = np.ones((3, 3))
    train = poisson_encode(img, max_rate=1.0, steps=50, seed=1)
    assert torch.all(train.data == 1.0)


def test_poisson_empirical_rate_binomial_bounds():
    # Oracle: binomial statistics, 3 sigma over 10000 steps.
    steps = 10000
    p = 0.3 * 0.5
    img = np.full((1,), 0.3)
    train = poisson_encode(img, max_rate=0.5, steps=steps, seed=42)
    rate = train.rate().item()
    sigma = np.sqrt(p * (1 - p) / steps)
    assert abs(rate - p) <= 3 * sigma


def test_poisson_deterministic_per_seed():
    img = np.random.default_rng(3).random((5, 5))
    a = poisson_encode(img, max_rate=0.8, steps=64, seed=7)
    b = poisson_encode(img, max_rate=0.8, steps=64, seed=7)
    c = poisson_encode(img, max_rate=0.8, steps=64, seed=8)
    assert torch.equal(a.data, b.data)
    assert not torch.equal(a.data, c.data)


def test_poisson_rejects_out_of_range_intensity():
    with pytest.raises(DomainError):
        poisson_encode(np.array([1.2]), max_rate=1.0, steps=10, seed=0)
    with pytest.raises(DomainError):
        poisson_encode(np.array([0.5]), max_rate=0.0, steps=10, seed=0)


def test_ttfs_strongest_stimulus_spikes_first():
    train = ttfs_encode(np.array([1.0]), steps=10)
    assert train.data[0, 0] == 1.0
    assert train.data.sum() == 1.0


def test_ttfs_zero_intensity_silent():
    train = ttfs_encode(np.array([0.0]), steps=10)
    assert train.data.sum() == 0.0


def test_ttfs_half_intensity_midpoint():
    # round((1 - 0.5) * (11 - 1)) = 5
    train = ttfs_encode(np.array([0.5]), steps=11)
    assert train.data[5, 0] == 1.0
    assert train.data.sum() == 1.0


def test_ttfs_at_most_one_spike_per_pixel():
    img = np.random.default_rng(0).random((8, 8))
    train = ttfs_encode(img, steps=16)
    per_pixel = train.data.sum(dim=0)
    assert torch.all(per_pixel <= 1.0)
    assert torch.all(per_pixel[torch.as_tensor(img) > 0] == 1.0)


def test_ttfs_needs_two_steps():
    with pytest.raises(DomainError):
        ttfs_encode(np.array([0.5]), steps=1)
