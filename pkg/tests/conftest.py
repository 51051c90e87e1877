import numpy as np
import pytest

from repsim import Layer, LayerPosition, LayerSet


@pytest.fixture
def rng():
    return np.random.default_rng(20260816)


def correlated_pair(rng, m, p1, p2, noise=0.5):
    """x random, y a linear readout of x plus noise; solidly dependent."""
    x = rng.normal(size=(m, p1))
    y = x @ rng.normal(size=(p1, p2)) + noise * rng.normal(size=(m, p2))
    return x, y


def make_layer_set(rng, layer_count, m, p, stage_every=2):
    layers = [
        Layer(
            f"layer{i}",
            rng.normal(size=(m, p)),
            stage=i // stage_every,
            position=LayerPosition(i % 2),
        )
        for i in range(layer_count)
    ]
    return LayerSet(layers)


def shared_pc_layer_set(rng, layer_count, m, p, block, fraction=0.97):
    """Layers in ``block`` (inclusive range) share a dominant first PC
    carrying ``fraction`` of their variance; the rest are independent."""
    start, end = block
    u = rng.normal(size=m)
    u -= u.mean()
    u /= np.linalg.norm(u)
    layers = []
    for i in range(layer_count):
        noise = rng.normal(size=(m, p))
        noise -= noise.mean(axis=0)
        if start <= i <= end:
            v = rng.normal(size=p)
            v /= np.linalg.norm(v)
            noise -= np.outer(u, u @ noise)  # keep the planted direction clean
            noise_energy = float(np.sum(noise**2))
            # scale the rank-1 part so it carries the requested share
            signal_energy = noise_energy * fraction / (1.0 - fraction)
            x = np.sqrt(signal_energy) * np.outer(u, v) + noise
        else:
            x = noise
        layers.append(Layer(f"layer{i}", x, stage=0, position=LayerPosition.OTHER))
    return LayerSet(layers)
