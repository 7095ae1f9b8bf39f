"""Counter-based random streams keyed by (master seed, row size, replicate).

Every row of every cell gets its own Philox stream.  The 128-bit Philox key
is built from two 64-bit words,

    key[0] = splitmix64(master_seed)
    key[1] = splitmix64((m << 32) | replicate)

``splitmix64`` (the finalizer of Steele, Lea & Flood's SplitMix64) is a
bijection on 64-bit words, so the map from triples to keys is injective as
long as ``m`` and ``replicate`` each fit in 32 bits.  Results therefore never
depend on how replicates are scheduled across threads.
"""

import numpy as np

from exchclt.errors import InvalidArgument

MASK64 = (1 << 64) - 1
_LIMIT32 = 1 << 32


def splitmix64(x):
    """SplitMix64 avalanche finalizer on a Python int (mod 2**64)."""
    z = (x + 0x9E3779B97F4A7C15) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def stream_key(master_seed, m, replicate_index):
    if replicate_index < 0:
        raise InvalidArgument(f"replicate_index must be >= 0, got {replicate_index}")
    if not 0 <= m < _LIMIT32 or replicate_index >= _LIMIT32:
        raise InvalidArgument("m and replicate_index must fit in 32 bits")
    return (
        splitmix64(int(master_seed) & MASK64),
        splitmix64((int(m) << 32) | int(replicate_index)),
    )


def _philox_state(key):
    return {
        "bit_generator": "Philox",
        "state": {"counter": np.zeros(4, dtype=np.uint64),
                  "key": np.array(key, dtype=np.uint64)},
        "buffer": np.zeros(4, dtype=np.uint64),
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }


def derive_stream(master_seed, m, replicate_index):
    """Independent generator for one (seed, m, replicate) triple."""
    # Philox(key=...) would still pull OS entropy for its unused seed path
    bit_gen = np.random.Philox(0)
    bit_gen.state = _philox_state(stream_key(master_seed, m, replicate_index))
    return np.random.Generator(bit_gen)


def reset_stream(generator, master_seed, m, replicate_index):
    """Rewind a Philox-backed ``generator`` to the start of the triple's stream.

    Equivalent to ``derive_stream`` but reuses the object; used in hot loops.
    """
    generator.bit_generator.state = _philox_state(stream_key(master_seed, m, replicate_index))
    return generator
