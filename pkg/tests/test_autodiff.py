"""Tensor engine tests: primitive gradients, optimizer, checkpoint format."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import molfusion.autodiff as ad
from molfusion.autodiff import (
    Adam,
    DigestMismatchError,
    NotScalarError,
    ShapeMismatchError,
    Tensor,
    adam_step,
    backward,
    grad_check,
    load_checkpoint,
    make_rng,
    save_checkpoint,
)


def _rand(rng, *shape):
    return Tensor(rng.standard_normal(shape), requires_grad=True)


# Primitive gradient sweep: ~50 random points per op via hypothesis seeds,
# which together exceed a thousand checked points across the op set.
UNARY_OPS = {
    "relu": lambda x: ad.relu(x),
    "leaky_relu": lambda x: ad.leaky_relu(x, 0.01),
    "elu": lambda x: ad.elu(x),
    "gelu": lambda x: ad.gelu(x),
    "tanh": lambda x: ad.tanh(x),
    "sigmoid": lambda x: ad.sigmoid(x),
    "softplus": lambda x: ad.softplus(x),
    "exp": lambda x: ad.exp(x),
    "neg": lambda x: ad.neg(x),
    "transpose": lambda x: ad.transpose(x),
    "softmax0": lambda x: ad.softmax(x, axis=0),
    "softmax1": lambda x: ad.softmax(x, axis=1),
    "layer_norm": lambda x: ad.layer_norm(x),
    "sum_all": lambda x: x,
    "sum_axis0": lambda x: ad.sum_(x, axis=0, keepdims=True),
    "mean_axis1": lambda x: ad.mean(x, axis=1, keepdims=True),
    "reshape": lambda x: ad.reshape(x, (x.size, 1)),
    "slice": lambda x: x[:, : max(1, x.shape[1] // 2)],
}

BINARY_OPS = {
    "add": ad.add,
    "sub": ad.sub,
    "mul": ad.mul,
    "div": lambda a, b: ad.div(a, ad.add(ad.mul(b, b), Tensor(0.5))),
    "matmul": None,  # handled separately (shape constraints)
}


class TestPrimitiveGradients:
    @pytest.mark.parametrize("name", sorted(UNARY_OPS))
    @given(seed=st.integers(0, 49))
    @settings(max_examples=50, deadline=None)
    def test_unary(self, name, seed):
        rng = make_rng(seed)
        rows, cols = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        x = _rand(rng, rows, cols)
        # keep away from relu/leaky kinks where finite differences lie
        if name in ("relu", "leaky_relu", "elu"):
            x.data[np.abs(x.data) < 0.05] += 0.1
        op = UNARY_OPS[name]
        report = grad_check(lambda: ad.sum_(ad.mul(op(x), op(x))), [x], rtol=1e-5, atol=1e-8)
        assert report.passed, f"{name}: {report.summary()}"

    @pytest.mark.parametrize("name", ["add", "sub", "mul", "div"])
    @given(seed=st.integers(0, 29))
    @settings(max_examples=30, deadline=None)
    def test_binary_with_broadcast(self, name, seed):
        rng = make_rng(seed + 1000)
        rows, cols = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        a = _rand(rng, rows, cols)
        b = _rand(rng, 1, cols) if seed % 2 else _rand(rng, rows, cols)
        op = BINARY_OPS[name]
        report = grad_check(lambda: ad.sum_(ad.mul(op(a, b), op(a, b))), [a, b], rtol=1e-5, atol=1e-8)
        assert report.passed, f"{name}: {report.summary()}"

    @given(seed=st.integers(0, 29))
    @settings(max_examples=30, deadline=None)
    def test_matmul(self, seed):
        rng = make_rng(seed + 2000)
        n, k, m = (int(rng.integers(1, 5)) for _ in range(3))
        a, b = _rand(rng, n, k), _rand(rng, k, m)
        report = grad_check(lambda: ad.sum_(ad.mul(a @ b, a @ b)), [a, b], rtol=1e-5, atol=1e-8)
        assert report.passed

    def test_three_chained_matmuls_meet_finite_differences(self):
        rng = make_rng(44)
        x = Tensor(rng.standard_normal((2, 3)))
        a, b, c = _rand(rng, 3, 4), _rand(rng, 4, 5), _rand(rng, 5, 2)
        report = grad_check(
            lambda: ad.sum_(x @ a @ b @ c), {"a": a, "b": b, "c": c}, rtol=1e-4, atol=1e-8
        )
        assert report.passed, report.summary()

    @given(seed=st.integers(0, 19))
    @settings(max_examples=20, deadline=None)
    def test_log(self, seed):
        rng = make_rng(seed + 3000)
        x = Tensor(rng.uniform(0.2, 3.0, size=(3, 2)), requires_grad=True)
        report = grad_check(lambda: ad.sum_(ad.log(x)), [x], rtol=1e-5, atol=1e-8)
        assert report.passed

    @given(seed=st.integers(0, 19))
    @settings(max_examples=20, deadline=None)
    def test_concat_and_gather(self, seed):
        rng = make_rng(seed + 4000)
        a, b = _rand(rng, 3, 2), _rand(rng, 2, 2)
        idx = np.array([0, 2, 2, 4, 1])

        def f():
            stacked = ad.concat([a, b], axis=0)
            picked = ad.gather_rows(stacked, idx)
            return ad.sum_(ad.mul(picked, picked))

        report = grad_check(f, [a, b], rtol=1e-5, atol=1e-8)
        assert report.passed

    @given(seed=st.integers(0, 19))
    @settings(max_examples=20, deadline=None)
    def test_segment_sum_and_broadcast(self, seed):
        rng = make_rng(seed + 5000)
        x = _rand(rng, 6, 3)
        seg = np.array([0, 0, 1, 2, 2, 2])

        def f():
            pooled = ad.segment_sum(x, seg, 3)
            wide = ad.broadcast_to(ad.sum_(pooled, axis=0, keepdims=True), (4, 3))
            return ad.sum_(ad.mul(wide, wide))

        report = grad_check(f, [x], rtol=1e-5, atol=1e-8)
        assert report.passed


class TestOpSemantics:
    def test_softmax_uniform(self):
        s = ad.softmax(Tensor([[1.0, 1.0, 1.0]]), axis=1)
        assert np.allclose(s.data, 1 / 3)

    def test_relu_and_leaky(self):
        assert ad.relu(Tensor([[-2.0]])).data[0, 0] == 0.0
        assert ad.leaky_relu(Tensor([[-2.0]]), 0.01).data[0, 0] == pytest.approx(-0.02)

    def test_tanh_grad_at_zero(self):
        x = Tensor([[0.0]], requires_grad=True)
        ad.tanh(x).backward()
        assert x.grad[0, 0] == pytest.approx(1.0)

    def test_linear_map_grad_structure(self):
        rng = make_rng(0)
        w = _rand(rng, 3, 4)
        x = Tensor(rng.standard_normal((4, 1)))
        ad.sum_(w @ x).backward()
        assert np.allclose(w.grad, np.tile(x.data.T, (3, 1)))

    def test_unreachable_parameter_zero_grad(self):
        p = Tensor(np.ones((2, 2)), requires_grad=True)
        q = Tensor(np.ones((2, 2)), requires_grad=True)
        ad.sum_(ad.mul(p, p)).backward()
        assert q.grad is None

    def test_backward_accumulates_until_zeroed(self):
        x = Tensor([[2.0]], requires_grad=True)
        ad.sum_(ad.mul(x, x)).backward()
        first = x.grad.copy()
        ad.sum_(ad.mul(x, x)).backward()
        assert np.allclose(x.grad, 2 * first)
        x.zero_grad()
        assert x.grad is None

    def test_not_scalar(self):
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(NotScalarError):
            backward(ad.mul(x, x))

    def test_shape_mismatch_message_has_both_shapes(self):
        a, b = Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3)))
        with pytest.raises(ShapeMismatchError) as err:
            ad.matmul(a, b)
        assert "(2, 3)" in str(err.value)

    def test_finite_check(self):
        ad.set_finite_check(True)
        try:
            with np.errstate(divide="ignore"), pytest.raises(ad.NonFiniteError):
                ad.log(Tensor([[0.0]]))
        finally:
            ad.set_finite_check(False)

    def test_float32_mode_optional(self):
        ad.set_default_dtype(np.float32)
        try:
            t = Tensor([[1.0, 2.0]], requires_grad=True)
            assert t.data.dtype == np.float32
            out = ad.sum_(ad.mul(t, t))
            backward(out)
            assert t.grad.dtype == np.float32
        finally:
            ad.set_default_dtype(np.float64)
        assert Tensor([[1.0]]).data.dtype == np.float64

    def test_forward_determinism(self):
        rng1, rng2 = make_rng(42), make_rng(42)
        a = rng1.standard_normal((50, 50))
        b = rng2.standard_normal((50, 50))
        assert np.array_equal(a, b)
        x = Tensor(a)
        y1 = ad.gelu(x @ x).data
        y2 = ad.gelu(Tensor(b) @ Tensor(b)).data
        assert np.array_equal(y1, y2)


class TestDropout:
    def test_eval_mode_identity(self):
        x = Tensor(np.ones((4, 4)))
        out = ad.dropout(x, 0.5, make_rng(0), train=False)
        assert out is x

    def test_train_expectation_preserved(self):
        rng = make_rng(123)
        x = Tensor(np.ones((100, 1000)))
        kept = ad.dropout(x, 0.3, rng, train=True)
        assert kept.data.mean() == pytest.approx(1.0, rel=0.01)

    def test_gradient_respects_mask(self):
        x = Tensor(np.ones((3, 3)), requires_grad=True)
        rng = make_rng(5)
        out = ad.dropout(x, 0.5, rng, train=True)
        ad.sum_(out).backward()
        scale = 1.0 / 0.5
        assert set(np.unique(x.grad)) <= {0.0, scale}

    def test_invalid_rate(self):
        with pytest.raises(ValueError):
            ad.dropout(Tensor([[1.0]]), 1.0, make_rng(0), train=True)


class TestAdam:
    def test_first_step_magnitude(self):
        params = {"w": np.array([1.0, -2.0, 3.0])}
        grads = {"w": np.array([0.5, -0.01, 100.0])}
        new_params, _state = adam_step(params, grads, {}, lr=1e-3)
        delta = new_params["w"] - params["w"]
        assert np.all(np.sign(delta) == -np.sign(grads["w"]))
        assert np.all(np.abs(delta) > 0.999e-3) and np.all(np.abs(delta) <= 1e-3 + 1e-12)

    def test_zero_grad_no_motion(self):
        params = {"w": np.array([1.0, 2.0])}
        state: dict = {}
        for _ in range(10):
            params, state = adam_step(params, {"w": np.zeros(2)}, state)
        assert np.array_equal(params["w"], [1.0, 2.0])

    def test_converges_on_quadratic(self):
        w = np.array([0.0])
        state: dict = {}
        for _ in range(100):
            grad = 2 * (w - 3.0)
            out, state = adam_step({"w": w}, {"w": grad}, state, lr=0.1)
            w = out["w"]
        assert abs(w[0] - 3.0) < 0.5

    def test_class_wrapper_matches_functional(self):
        from molfusion.autodiff.params import ParameterStore

        store = ParameterStore()
        t = store.register("w", np.array([[1.0, 2.0]]), "zeros")
        opt = Adam(store, lr=0.01)
        loss = ad.sum_(ad.mul(t, t))
        backward(loss)
        opt.step()
        params, _ = adam_step(
            {"w": np.array([[1.0, 2.0]])}, {"w": np.array([[2.0, 4.0]])}, {}, lr=0.01
        )
        assert np.allclose(t.data, params["w"])


class TestGradCheckHarness:
    def test_quadratic_tight(self):
        x = Tensor(np.array([[1.0, -2.0, 0.5]]), requires_grad=True)
        report = grad_check(lambda: ad.sum_(ad.mul(x, x)), [x], rtol=1e-6, atol=1e-10)
        assert report.passed and report.max_rel_error < 1e-6

    def test_dead_relu_region_passes_under_atol(self):
        x = Tensor(np.array([[-5.0, -3.0]]), requires_grad=True)
        report = grad_check(lambda: ad.sum_(ad.relu(x)), [x], rtol=1e-5, atol=1e-8)
        assert report.passed

    def test_failure_reported_with_indices(self):
        x = Tensor(np.array([[1.0]]), requires_grad=True)

        def bad():
            # forward uses x^2 but we corrupt the gradient afterwards
            out = ad.sum_(ad.mul(x, x))
            return out

        report = grad_check(bad, [x])
        assert report.passed
        x.zero_grad()

        class Lying(Tensor):
            pass

        y = Tensor(np.array([[1.0]]), requires_grad=True)

        def lying():
            out = ad.mul(y, y)
            wrong = Tensor.__new__(Tensor)
            wrong.data = out.data
            wrong.requires_grad = True
            wrong.grad = None
            wrong._parents = (y,)
            wrong.op_name = "lying"
            wrong._backward = lambda g: None  # never propagates
            return ad.sum_(wrong)

        report = grad_check(lying, [y])
        assert not report.passed
        assert report.failures[0][0] == "tensor0"


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "model.ckpt"
        config = {"model": {"hidden_dim": 8}, "featurize": {"morgan_bits": 64}}
        arrays = {
            "a.w": np.arange(6, dtype=np.float64).reshape(2, 3),
            "b": np.array([[0.5]]),
        }
        save_checkpoint(path, config, arrays)
        loaded_config, loaded = load_checkpoint(path)
        assert loaded_config == config
        for name in arrays:
            assert np.array_equal(loaded[name], arrays[name])

    def test_deterministic_bytes(self, tmp_path):
        config = {"k": 1}
        arrays = {"w": np.ones((3, 3))}
        p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        save_checkpoint(p1, config, arrays)
        save_checkpoint(p2, config, arrays)
        assert p1.read_bytes() == p2.read_bytes()

    def test_digest_mismatch_rejected(self, tmp_path):
        path = tmp_path / "model.ckpt"
        save_checkpoint(path, {"k": 1}, {"w": np.ones(2)})
        raw = bytearray(path.read_bytes())
        # corrupt the embedded config text ("k": 1 -> "k": 2)
        idx = raw.find(b'"k":1')
        raw[idx + 4 : idx + 5] = b"2"
        path.write_bytes(bytes(raw))
        with pytest.raises(DigestMismatchError):
            load_checkpoint(path)
        config, _ = load_checkpoint(path, force=True)
        assert config == {"k": 2}

    def test_little_endian_float64_payload(self, tmp_path):
        import json as _json
        import struct

        path = tmp_path / "model.ckpt"
        save_checkpoint(path, {}, {"w": np.array([1.5, -2.0])})
        raw = path.read_bytes()
        assert raw[:8] == b"MOLFUSE1"
        (hlen,) = struct.unpack("<I", raw[8:12])
        header = _json.loads(raw[12 : 12 + hlen])
        entry = header["tensors"][0]
        start = 12 + hlen + entry["offset"]
        values = struct.unpack("<2d", raw[start : start + 16])
        assert values == (1.5, -2.0)
