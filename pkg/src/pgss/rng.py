"""Counter-based random streams.

Every replicate owns a stream keyed by ``(seed, stream_id)``. A draw is a pure
function of ``(seed, stream_id, counter)``, computed with the Philox4x64-10
block cipher, so a batch of streams can be advanced in one vectorized call and
still produce exactly the numbers each stream would produce on its own.
"""
from __future__ import annotations

import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_ROUNDS = 10
# Second key word; keeps the key schedule away from the all-zero key.
_KEY1 = np.uint64(0x5047535321A5F00D)
_U64_MAX = 2**64 - 1


def _mulhilo(m_lo, m_hi, b):
    """Full 64x64 -> 128 bit product of a pre-split constant and ``b``, as (hi, lo)."""
    b_lo = b & _MASK32
    b_hi = b >> _SHIFT32
    ll = m_lo * b_lo
    lh = m_lo * b_hi
    hl = m_hi * b_lo
    mid = (ll >> _SHIFT32) + (lh & _MASK32) + (hl & _MASK32)
    hi = m_hi * b_hi + (lh >> _SHIFT32) + (hl >> _SHIFT32) + (mid >> _SHIFT32)
    lo = (mid << _SHIFT32) | (ll & _MASK32)
    return hi, lo


_M0_SPLIT = (_M0 & _MASK32, _M0 >> _SHIFT32)
_M1_SPLIT = (_M1 & _MASK32, _M1 >> _SHIFT32)


def philox4x64(counter, key):
    """Philox4x64-10 block function.

    Parameters
    ----------
    counter : sequence of 4 uint64 arrays (broadcastable)
    key : sequence of 2 uint64 arrays (broadcastable)

    Returns
    -------
    list of 4 uint64 arrays
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = (np.asarray(k, dtype=np.uint64) for k in key)
    with np.errstate(over="ignore"):
        for r in range(_ROUNDS):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(*_M0_SPLIT, c0)
            hi1, lo1 = _mulhilo(*_M1_SPLIT, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return [c0, c1, c2, c3]


def _check_u64(value, name):
    value = int(value)
    if not 0 <= value <= _U64_MAX:
        raise ValueError(f"{name} must be a 64-bit unsigned integer, got {value}")
    return value


class StreamBank:
    """A batch of independent streams sharing one seed.

    Stream ``i`` of the bank is keyed by ``(seed, stream_ids[i])`` and carries
    its own draw counter, so members may be advanced selectively (as rejection
    samplers need) without disturbing the others.
    """

    def __init__(self, seed, stream_ids):
        self.seed = _check_u64(seed, "seed")
        ids = np.atleast_1d(np.asarray(stream_ids))
        if ids.ndim != 1:
            raise ValueError("stream_ids must be one-dimensional")
        if ids.size and (ids.min() < 0):
            raise ValueError("stream_ids must be nonnegative")
        self.stream_ids = ids.astype(np.uint64)
        self.counters = np.zeros(ids.size, dtype=np.uint64)

    def __len__(self):
        return self.stream_ids.size

    def blocks(self, idx=None):
        """Return four uniforms on (0, 1) per selected stream.

        Parameters
        ----------
        idx : int array, optional
            Positions of the streams to advance; all streams when omitted.

        Returns
        -------
        ndarray of shape (m, 4)
        """
        if idx is None:
            idx = np.arange(len(self))
        ctr = self.counters[idx]
        words = philox4x64(
            (ctr, self.stream_ids[idx], np.uint64(0), np.uint64(0)),
            (np.uint64(self.seed), _KEY1),
        )
        self.counters[idx] = ctr + np.uint64(1)
        out = np.empty((ctr.size, 4))
        for j, w in enumerate(words):
            # top 53 bits, shifted half a step off zero: open interval (0, 1)
            out[:, j] = ((w >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
        return out


class RngStream(StreamBank):
    """A single stream keyed by ``(seed, stream_id)``.

    Draws from ``RngStream(seed, i)`` are identical to the draws of member
    ``i`` in any :class:`StreamBank` with the same seed.
    """

    def __init__(self, seed, stream_id=0):
        super().__init__(seed, [_check_u64(stream_id, "stream_id")])

    @property
    def stream_id(self):
        return int(self.stream_ids[0])

    @property
    def counter(self):
        return int(self.counters[0])

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"
