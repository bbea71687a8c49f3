"""Dense float64 tensors with recorded reverse-mode differentiation.

The operation set is small and closed under differentiation: every
backward rule is itself built from the same primitives, so a gradient
can be fed back into the graph and differentiated again.  That second
pass is what the critic's gradient-norm penalty needs.

All data is float64.  Forward evaluation is eager; each result keeps
references to its parents and one vjp callable per parent.  ``backward``
returns plain arrays, ``grad_graph`` returns live tensors that remain
differentiable.
"""

from __future__ import annotations

import numpy as np

_ACTIVE_TAPE = None


class Tensor:
    """A node in the computation graph.

    Leaves are created with :func:`constant` / :func:`parameter`; every
    op produces a new node.  ``data`` is always a float64 ndarray.
    """

    __slots__ = ("data", "parents", "vjps", "op", "_fwd")

    def __init__(self, data, parents=(), vjps=(), op="leaf", fwd=None):
        self.data = data
        self.parents = parents
        self.vjps = vjps
        self.op = op
        self._fwd = fwd
        if _ACTIVE_TAPE is not None:
            _ACTIVE_TAPE.nodes.append(self)

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def item(self):
        return float(self.data)

    def detach(self):
        return constant(self.data)

    def __repr__(self):
        return f"Tensor(op={self.op}, shape={self.data.shape})"

    def __add__(self, other):
        return add(self, _wrap(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __rtruediv__(self, other):
        return div(_wrap(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, p):
        return pow_const(self, p)


class Tape:
    """Ordered record of every node created while the tape is active.

    Replaying re-executes each recorded forward step; with unchanged
    leaves the recomputed values are bit-identical to the recorded run.
    """

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        global _ACTIVE_TAPE
        self._prev = _ACTIVE_TAPE
        _ACTIVE_TAPE = self
        return self

    def __exit__(self, *exc):
        global _ACTIVE_TAPE
        _ACTIVE_TAPE = self._prev
        return False

    def replay(self):
        """Recompute every non-leaf node in recording order, in place."""
        for node in self.nodes:
            if node._fwd is not None:
                node.data = node._fwd()


def _asarray(x):
    return np.asarray(x, dtype=np.float64)


def _wrap(x):
    if isinstance(x, Tensor):
        return x
    return constant(x)


def constant(x):
    """Wrap an array-like as a graph leaf."""
    return Tensor(_asarray(x))


def parameter(x):
    """Alias of :func:`constant`; named for readability at call sites."""
    return Tensor(_asarray(x).copy())


def _make(data, parents, vjps, op, fwd):
    keep_fwd = fwd if _ACTIVE_TAPE is not None else None
    return Tensor(data, parents, vjps, op, keep_fwd)


def _sum_to(g, shape):
    """Reduce a broadcast gradient back to ``shape`` (graph op)."""
    if g.data.shape == shape:
        return g
    extra = g.data.ndim - len(shape)
    if extra:
        g = tsum(g, axis=tuple(range(extra)))
    axes = tuple(i for i, n in enumerate(shape) if n == 1 and g.data.shape[i] != 1)
    if axes:
        g = tsum(g, axis=axes, keepdims=True)
    if g.data.shape != shape:
        g = reshape(g, shape)
    return g


# ---------------------------------------------------------------------------
# elementwise arithmetic


def add(a, b):
    a, b = _wrap(a), _wrap(b)
    return _make(
        a.data + b.data,
        (a, b),
        (lambda g: _sum_to(g, a.data.shape), lambda g: _sum_to(g, b.data.shape)),
        "add",
        lambda: a.data + b.data,
    )


def sub(a, b):
    a, b = _wrap(a), _wrap(b)
    return _make(
        a.data - b.data,
        (a, b),
        (lambda g: _sum_to(g, a.data.shape), lambda g: _sum_to(neg(g), b.data.shape)),
        "sub",
        lambda: a.data - b.data,
    )


def neg(a):
    a = _wrap(a)
    return _make(-a.data, (a,), (lambda g: neg(g),), "neg", lambda: -a.data)


def mul(a, b):
    a, b = _wrap(a), _wrap(b)
    return _make(
        a.data * b.data,
        (a, b),
        (lambda g: _sum_to(mul(g, b), a.data.shape), lambda g: _sum_to(mul(g, a), b.data.shape)),
        "mul",
        lambda: a.data * b.data,
    )


def div(a, b):
    a, b = _wrap(a), _wrap(b)
    return _make(
        a.data / b.data,
        (a, b),
        (
            lambda g: _sum_to(div(g, b), a.data.shape),
            lambda g: _sum_to(neg(div(mul(g, a), mul(b, b))), b.data.shape),
        ),
        "div",
        lambda: a.data / b.data,
    )


def pow_const(a, p):
    """a**p for a python-scalar exponent."""
    a = _wrap(a)
    p = float(p)
    return _make(
        a.data**p,
        (a,),
        (lambda g: mul(g, mul(constant(p), pow_const(a, p - 1.0))),),
        "pow",
        lambda: a.data**p,
    )


def exp(a):
    a = _wrap(a)
    out = _make(np.exp(a.data), (a,), (), "exp", lambda: np.exp(a.data))
    out.vjps = (lambda g: mul(g, out),)
    return out


def sqrt(a):
    return pow_const(a, 0.5)


def absolute(a):
    """Elementwise |x| with a constant-sign backward rule (0 at x = 0)."""
    a = _wrap(a)
    sign = np.sign(a.data)
    return _make(
        np.abs(a.data),
        (a,),
        (lambda g: mul(g, constant(sign)),),
        "abs",
        lambda: np.abs(a.data),
    )


def leaky_relu(a, slope=0.2):
    """Elementwise max(x, slope*x); slope must lie in (0, 1).

    The backward rule treats the kink mask as a constant, so second
    derivatives through the activation are zero almost everywhere.
    """
    a = _wrap(a)
    if not 0.0 < slope < 1.0:
        raise ValueError(f"leaky_relu slope must be in (0, 1), got {slope}")
    mask = np.where(a.data > 0.0, 1.0, slope)
    return _make(
        a.data * mask,
        (a,),
        (lambda g: mul(g, constant(mask)),),
        "leaky_relu",
        lambda: np.where(a.data > 0.0, a.data, a.data * slope),
    )


# ---------------------------------------------------------------------------
# shape and indexing


def reshape(a, shape):
    a = _wrap(a)
    shape = tuple(shape)
    old = a.data.shape
    return _make(
        a.data.reshape(shape),
        (a,),
        (lambda g: reshape(g, old),),
        "reshape",
        lambda: a.data.reshape(shape),
    )


def transpose(a, axes):
    a = _wrap(a)
    axes = tuple(axes)
    inv = tuple(np.argsort(axes))
    return _make(
        np.ascontiguousarray(a.data.transpose(axes)),
        (a,),
        (lambda g: transpose(g, inv),),
        "transpose",
        lambda: np.ascontiguousarray(a.data.transpose(axes)),
    )


def broadcast_to(a, shape):
    a = _wrap(a)
    shape = tuple(shape)
    old = a.data.shape
    return _make(
        np.ascontiguousarray(np.broadcast_to(a.data, shape)),
        (a,),
        (lambda g: _sum_to(g, old),),
        "broadcast_to",
        lambda: np.ascontiguousarray(np.broadcast_to(a.data, shape)),
    )


def tsum(a, axis=None, keepdims=False):
    a = _wrap(a)
    old = a.data.shape

    def vjp(g):
        if axis is None:
            return broadcast_to(reshape(g, (1,) * len(old)), old) if old else g
        axes = axis if isinstance(axis, tuple) else (axis,)
        axes = tuple(ax % len(old) for ax in axes)
        if keepdims:
            return broadcast_to(g, old)
        kshape = tuple(1 if i in axes else n for i, n in enumerate(old))
        return broadcast_to(reshape(g, kshape), old)

    return _make(
        np.sum(a.data, axis=axis, keepdims=keepdims),
        (a,),
        (vjp,),
        "sum",
        lambda: np.sum(a.data, axis=axis, keepdims=keepdims),
    )


def mean(a, axis=None, keepdims=False):
    a = _wrap(a)
    if axis is None:
        n = a.data.size
    else:
        axes = axis if isinstance(axis, tuple) else (axis,)
        n = 1
        for ax in axes:
            n *= a.data.shape[ax]
    return mul(tsum(a, axis=axis, keepdims=keepdims), constant(1.0 / n))


def take(a, idx, axis):
    """Gather along one axis with an integer index array."""
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.intp)
    n = a.data.shape[axis]
    return _make(
        np.take(a.data, idx, axis=axis),
        (a,),
        (lambda g: index_add(g, idx, axis, n),),
        "take",
        lambda: np.take(a.data, idx, axis=axis),
    )


def index_add(a, idx, axis, n):
    """Scatter-add along one axis into a fresh array of extent ``n``.

    Adjoint of :func:`take`: rows of ``a`` are accumulated at positions
    ``idx`` of the output axis.
    """
    a = _wrap(a)
    idx = np.asarray(idx, dtype=np.intp)

    def fwd():
        shape = list(a.data.shape)
        shape[axis] = n
        out = np.zeros(shape, dtype=np.float64)
        moved = np.moveaxis(out, axis, 0)
        np.add.at(moved, idx, np.moveaxis(a.data, axis, 0))
        return out

    return _make(fwd(), (a,), (lambda g: take(g, idx, axis),), "index_add", fwd)


def concat(parts, axis=0):
    parts = tuple(_wrap(p) for p in parts)
    sizes = [p.data.shape[axis] for p in parts]
    offsets = np.cumsum([0] + sizes)

    def make_vjp(i):
        idx = np.arange(offsets[i], offsets[i + 1])
        return lambda g: take(g, idx, axis)

    return _make(
        np.concatenate([p.data for p in parts], axis=axis),
        parts,
        tuple(make_vjp(i) for i in range(len(parts))),
        "concat",
        lambda: np.concatenate([p.data for p in parts], axis=axis),
    )


def _mm(a, b):
    # einsum (non-BLAS path) rounds each output element independently of
    # its position in the matrix; BLAS kernels do not.  Streamed
    # generation relies on recomputing a prefix bit-exactly at a larger
    # width, so position-independent rounding is contractual here.
    return np.einsum("ij,jk->ik", a, b)


def matmul(a, b):
    """Strict 2-D matrix product."""
    a, b = _wrap(a), _wrap(b)
    if a.data.ndim != 2 or b.data.ndim != 2:
        raise ValueError("matmul expects 2-D operands")
    return _make(
        _mm(a.data, b.data),
        (a, b),
        (
            lambda g: matmul(g, transpose(b, (1, 0))),
            lambda g: matmul(transpose(a, (1, 0)), g),
        ),
        "matmul",
        lambda: _mm(a.data, b.data),
    )


# ---------------------------------------------------------------------------
# temporal convolution

_MIRROR_CACHE = {}
_UNFOLD_CACHE = {}


def _mirror_index(t, pad):
    key = (t, pad)
    out = _MIRROR_CACHE.get(key)
    if out is None:
        if t < pad + 1:
            raise ValueError(f"sequence of length {t} too short for mirror pad {pad}")
        out = np.concatenate(
            [np.arange(pad, 0, -1), np.arange(t), np.arange(t - 2, t - 2 - pad, -1)]
        )
        _MIRROR_CACHE[key] = out
    return out


def _unfold_index(t, k):
    key = (t, k)
    out = _UNFOLD_CACHE.get(key)
    if out is None:
        out = (np.arange(k)[:, None] + np.arange(t)[None, :]).ravel()
        _UNFOLD_CACHE[key] = out
    return out


def temporal_conv(x, kernels, bias, support_mask=None):
    """Length-preserving 1-D convolution over the temporal axis.

    ``x`` is [C_in, T], ``kernels`` [C_out, C_in, K] with K odd, ``bias``
    [C_out].  Ends are mirror-padded without repeating the edge sample
    (pad of [a,b,c] -> [b,a,b,c,b]).  ``support_mask`` is a boolean
    [C_out, C_in] table; masked channel pairs contribute exactly zero.
    """
    x, kernels, bias = _wrap(x), _wrap(kernels), _wrap(bias)
    c_in, t = x.data.shape
    c_out, c_in_k, k = kernels.data.shape
    if t < 1:
        raise ValueError("temporal_conv needs at least one frame")
    if k % 2 == 0:
        raise ValueError(f"kernel size must be odd, got {k}")
    if c_in_k != c_in or bias.data.shape != (c_out,):
        raise ValueError(
            f"shape mismatch: input {x.data.shape}, kernels {kernels.data.shape}, "
            f"bias {bias.data.shape}"
        )
    if support_mask is not None:
        support_mask = np.asarray(support_mask)
        if support_mask.shape != (c_out, c_in):
            raise ValueError(f"support_mask shape {support_mask.shape} != ({c_out}, {c_in})")
        kernels = mul(kernels, constant(support_mask[:, :, None].astype(np.float64)))

    pad = (k - 1) // 2
    if pad:
        xp = take(x, _mirror_index(t, pad), axis=1)
    else:
        xp = x
    cols = take(xp, _unfold_index(t, k), axis=1)  # [C_in, K*T]
    cols = reshape(cols, (c_in * k, t))
    w2 = reshape(kernels, (c_out, c_in * k))
    return add(matmul(w2, cols), reshape(bias, (c_out, 1)))


# ---------------------------------------------------------------------------
# differentiation


def _needed_set(out, wrt):
    """Nodes lying on a path from some wrt leaf to ``out``."""
    wrt_ids = {id(w) for w in wrt}
    needed = {}
    stack = [(out, False)]
    while stack:
        node, done = stack.pop()
        if done:
            needed[id(node)] = id(node) in wrt_ids or any(
                needed.get(id(p), False) for p in node.parents
            )
            continue
        if id(node) in needed:
            continue
        needed[id(node)] = False
        stack.append((node, True))
        for p in node.parents:
            if id(p) not in needed:
                stack.append((p, False))
    return {k for k, v in needed.items() if v}


def _topo_order(out, needed):
    order = []
    seen = set()
    stack = [(out, False)]
    while stack:
        node, done = stack.pop()
        if done:
            order.append(node)
            continue
        if id(node) in seen or id(node) not in needed:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node.parents:
            stack.append((p, False))
    return order


def grad_graph(out, wrt):
    """Differentiate a scalar and return gradients as graph tensors.

    The returned tensors may be consumed by further ops and fed back to
    :func:`backward`; their values agree with :func:`backward` exactly
    because it is the same computation.
    """
    if out.data.shape != ():
        raise ValueError(f"grad_graph needs a scalar output, got shape {out.data.shape}")
    wrt = list(wrt)
    needed = _needed_set(out, wrt)
    grads = {id(out): constant(np.float64(1.0))}
    if id(out) in needed:
        for node in reversed(_topo_order(out, needed)):
            g = grads.get(id(node))
            if g is None:
                continue
            for parent, vjp in zip(node.parents, node.vjps):
                if id(parent) not in needed:
                    continue
                pg = vjp(g)
                acc = grads.get(id(parent))
                grads[id(parent)] = pg if acc is None else add(acc, pg)
    result = {}
    for w in wrt:
        g = grads.get(id(w))
        result[id(w)] = g if g is not None else constant(np.zeros_like(w.data))
    return result


def backward(out, wrt):
    """Gradients of a scalar as plain arrays, keyed by ``id(param)``.

    Parameters that do not participate in the graph receive zeros.
    """
    return {k: g.data for k, g in grad_graph(out, wrt).items()}


# ---------------------------------------------------------------------------
# optimizer


class AdamState:
    """Adam moments and step counter for a fixed parameter list."""

    def __init__(self, params, lr=1e-4, beta1=0.5, beta2=0.9, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]


def adam_step(state, grads, masks=None):
    """One bias-corrected Adam update, in place on the parameter leaves.

    ``grads`` maps ``id(param)`` to an array (as returned by
    :func:`backward`).  ``masks`` optionally maps ``id(param)`` to a
    boolean array; masked-out entries are forced back to exact zero
    after the update.
    """
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for i, p in enumerate(state.params):
        g = grads[id(p)]
        if g.shape != p.data.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.data.shape}")
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g
        mhat = state.m[i] / c1
        vhat = state.v[i] / c2
        p.data = p.data - state.lr * mhat / (np.sqrt(vhat) + state.eps)
        if masks is not None and id(p) in masks:
            p.data = p.data * masks[id(p)]
