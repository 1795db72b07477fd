import numpy as np
import pytest

from ltr.errors import CheckpointError
from ltr.nn.activations import Activation
from ltr.nn.checkpoint import load_checkpoint, save_checkpoint
from ltr.nn.network import ScoringNet
from ltr.nn.optim import Adam


def _train_steps(net, optimizer, x, steps):
    for _ in range(steps):
        _, cache = net.forward(x, mode="train")
        optimizer.step(net, net.backward(cache, np.arange(x.shape[0], dtype=float)))


class TestCheckpoint:
    """Test saving and restoring nets with optimizer state."""

    def test_resume_is_bit_exact(self, tmp_path, rng):
        """Test continuing from a checkpoint matches uninterrupted training."""
        x = rng.standard_normal((5, 3))
        net = ScoringNet.build(3, 3, 4, Activation.RRELU, batchnorm=True, seed=8)
        optimizer = Adam(lr=0.01)
        _train_steps(net, optimizer, x, 3)
        path = save_checkpoint(tmp_path / "ckpt.npz", net, optimizer)

        restored, restored_opt = load_checkpoint(path)
        assert restored_opt is not None
        _train_steps(net, optimizer, x, 3)
        _train_steps(restored, restored_opt, x, 3)
        for name, value in net.parameters().items():
            np.testing.assert_array_equal(value, restored.parameters()[name])
        np.testing.assert_array_equal(net.bn[0].running_var, restored.bn[0].running_var)

    def test_without_optimizer(self, tmp_path, rng):
        """Test a net-only checkpoint scores identically."""
        net = ScoringNet.build(3, 2, 4, Activation.SELU, seed=1).eval()
        restored, optimizer = load_checkpoint(save_checkpoint(tmp_path / "n.npz", net))
        assert optimizer is None
        assert restored.mode == "eval"
        x = rng.standard_normal((4, 3))
        np.testing.assert_array_equal(net.predict(x), restored.predict(x))

    def test_missing_file(self, tmp_path):
        """Test an unreadable path raises CheckpointError."""
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "absent.npz")

    def test_no_header(self, tmp_path):
        """Test an archive without the header is refused."""
        path = tmp_path / "bare.npz"
        np.savez(path, w=np.zeros(2))
        with pytest.raises(CheckpointError, match="header"):
            load_checkpoint(path)
