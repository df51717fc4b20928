import numpy as np
import pytest
import torch

from neurosub.errors import DimensionError
from neurosub.snn import (
    LifParams,
    LifState,
    MembraneReadout,
    SpikeTrain,
    SpikingConv2d,
    SpikingDense,
    SynapseWeights,
    conv_spiking_forward,
    direct_encode_layer,
    lif_step,
    pool_spiking,
)

PARAMS = LifParams(tau_m=20.0, v_th=1.0, dt=1.0)


def make_conv(weight_value, lif=PARAMS):
    layer = SpikingConv2d(1, 1, 1, lif=lif, dtype=torch.float64)
    with torch.no_grad():
        layer.weight.fill_(weight_value)
        layer.bias.zero_()
    return layer


def test_conv_zero_input_zero_output():
    train = SpikeTrain(torch.zeros(20, 1, 1, 4, 4, dtype=torch.float64))
    layer = make_conv(5.0)
    out = layer(train)
    assert out.data.sum() == 0


def test_conv_single_spike_strong_tap_fires_once():
    # Scalar oracle: v' = (dt/tau)*w, so w >= v_th*tau/dt forces a spike.
    w = PARAMS.v_th * PARAMS.tau_m / PARAMS.dt
    layer = make_conv(w)
    data = torch.zeros(5, 1, 1, 1, 1, dtype=torch.float64)
    data[0] = 1.0
    out = layer(SpikeTrain(data))
    assert out.data.sum() == 1.0
    assert out.data[0].item() == 1.0
    # Oracle cross-check with a bare lif_step loop.
    state = LifState(torch.zeros(1, dtype=torch.float64))
    state, s = lif_step(state, PARAMS, torch.tensor([w], dtype=torch.float64))
    assert s.item() == 1.0


def test_conv_weak_tap_stays_silent():
    layer = make_conv(0.5 * PARAMS.v_th * PARAMS.tau_m / PARAMS.dt)
    data = torch.zeros(5, 1, 1, 1, 1, dtype=torch.float64)
    data[0] = 1.0
    out = layer(SpikeTrain(data))
    assert out.data.sum() == 0.0


def test_conv_equivalent_to_dense_toeplitz():
    # Oracle: dense layer with the Toeplitz matrix of the kernel.
    rng = np.random.default_rng(5)
    kernel = rng.normal(scale=8.0, size=(2, 2))
    conv = SpikingConv2d(1, 1, 2, lif=PARAMS, dtype=torch.float64)
    with torch.no_grad():
        conv.weight.copy_(torch.as_tensor(kernel).reshape(1, 1, 2, 2))
        conv.bias.zero_()

    dense = SpikingDense(9, 4, PARAMS, dtype=torch.float64)
    toeplitz = np.zeros((4, 9))
    for oy in range(2):
        for ox in range(2):
            row = oy * 2 + ox
            for ky in range(2):
                for kx in range(2):
                    toeplitz[row, (oy + ky) * 3 + (ox + kx)] = kernel[ky, kx]
    with torch.no_grad():
        dense.weight.copy_(torch.as_tensor(toeplitz))
        dense.bias.zero_()

    spikes = (rng.random((30, 1, 1, 3, 3)) < 0.4).astype(np.float64)
    train = SpikeTrain(torch.as_tensor(spikes))
    out_conv = conv(train).data.reshape(30, 1, 4)
    out_dense = dense(SpikeTrain(torch.as_tensor(spikes.reshape(30, 1, 9)))).data
    assert torch.equal(out_conv, out_dense)


def test_conv_functional_state_passthrough():
    kernel = SynapseWeights(
        torch.full((1, 1, 1, 1), 30.0, dtype=torch.float64),
        torch.zeros(1, dtype=torch.float64),
    )
    state = LifState(torch.zeros(1, 1, 2, 2, dtype=torch.float64))
    data = torch.ones(3, 1, 1, 2, 2, dtype=torch.float64)
    out, state = conv_spiking_forward(SpikeTrain(data), kernel, state, PARAMS)
    assert out.data.shape == (3, 1, 1, 2, 2)
    assert torch.all(out.data == 1.0)  # 30/20 = 1.5 >= v_th each step


def test_pool_uniform_preserves_rate():
    data = torch.ones(40, 1, 1, 4, 4)
    out = pool_spiking(SpikeTrain(data), 2)
    assert out.data.shape == (40, 1, 1, 2, 2)
    assert torch.all(out.data == 1.0)


def test_pool_single_pixel_quarter_current():
    data = torch.zeros(1, 1, 1, 2, 2)
    data[0, 0, 0, 0, 0] = 1.0
    out = pool_spiking(SpikeTrain(data), 2)
    assert out.data.item() == pytest.approx(0.25)


def test_pool_rate_preservation_1000_steps():
    # Counting oracle: pooled mean rate equals full-resolution window mean.
    rng = np.random.default_rng(11)
    probs = rng.random((1, 1, 4, 4))
    spikes = (rng.random((1000, 1, 1, 4, 4)) < probs).astype(np.float32)
    out = pool_spiking(SpikeTrain(torch.as_tensor(spikes)), 2)
    pooled_rate = out.data.mean(dim=0).numpy()
    full_rate = spikes.mean(axis=0)
    oracle = full_rate.reshape(1, 1, 2, 2, 2, 2).mean(axis=(3, 5))
    assert np.allclose(pooled_rate, oracle, atol=1e-2 * 1.0)


def test_pool_indivisible_dims_rejected():
    with pytest.raises(DimensionError):
        pool_spiking(SpikeTrain(torch.zeros(2, 1, 1, 3, 3)), 2)


def test_direct_encoding_zero_image_silent():
    layer = make_conv(10.0)
    with torch.no_grad():
        layer.bias.zero_()
    out = direct_encode_layer(np.zeros((4, 4)), layer, steps=30)
    assert out.data.sum() == 0


def test_direct_encoding_rate_monotone_in_intensity():
    layer = make_conv(30.0)
    rates = []
    for level in np.linspace(0.1, 1.0, 10):
        out = direct_encode_layer(np.full((2, 2), level), layer, steps=200)
        rates.append(out.data.mean().item())
    assert all(b >= a for a, b in zip(rates, rates[1:]))
    assert rates[-1] > rates[0]


def test_direct_encoding_matches_lif_loop_exactly():
    # Oracle: explicit lif_step loop under the same constant current.
    w = 30.0
    intensity = 0.37
    layer = make_conv(w)
    out = direct_encode_layer(np.full((1, 1), intensity), layer, steps=400)
    state = LifState(torch.zeros(1, dtype=torch.float64))
    count = 0
    for _ in range(400):
        state, s = lif_step(
            state, PARAMS, torch.tensor([w * intensity], dtype=torch.float64)
        )
        count += s.item()
    assert out.data.sum().item() == count


def test_readout_zero_input_is_zero():
    layer = MembraneReadout(3, 2, PARAMS, dtype=torch.float64)
    out = layer(SpikeTrain(torch.zeros(25, 1, 3, dtype=torch.float64)))
    assert torch.all(out == 0.0)


def test_readout_converges_to_drive():
    # Recurrence oracle: Euler fixed point of the leak is the input current.
    layer = MembraneReadout(1, 1, PARAMS, dtype=torch.float64)
    with torch.no_grad():
        layer.weight.fill_(2.0)
        layer.bias.zero_()
    out = layer(SpikeTrain(torch.ones(400, 1, 1, dtype=torch.float64)))
    expected = 2.0 * (1.0 - (1.0 - PARAMS.leak) ** 400)
    assert out.item() == pytest.approx(expected, rel=1e-12)
    assert out.item() == pytest.approx(2.0, rel=1e-3)


def test_readout_gradient_matches_finite_differences():
    # Central differences h=1e-4 on the readout path (linear, no spikes).
    torch.manual_seed(0)
    layer = MembraneReadout(3, 2, PARAMS, dtype=torch.float64)
    spikes = (torch.rand(6, 2, 3, dtype=torch.float64) < 0.5).double()
    train = SpikeTrain(spikes)
    target = torch.tensor([[0.3, -0.2], [0.1, 0.4]], dtype=torch.float64)

    def loss_of():
        out = layer(train)
        return ((out - target) ** 2).mean()

    loss = loss_of()
    loss.backward()
    h = 1e-4
    for p in layer.parameters():
        grad = p.grad.clone()
        fd = torch.zeros_like(p)
        flat, fdflat = p.data.view(-1), fd.view(-1)
        for i in range(flat.numel()):
            orig = flat[i].item()
            flat[i] = orig + h
            lp = loss_of().item()
            flat[i] = orig - h
            lm = loss_of().item()
            flat[i] = orig
            fdflat[i] = (lp - lm) / (2 * h)
        assert torch.allclose(grad, fd, rtol=1e-6, atol=1e-9)
