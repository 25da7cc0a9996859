"""Counter-based random streams keyed by (seed, trajectory, polarisation, stream).

Every trajectory owns its generators, so results do not depend on how
trajectories are grouped into blocks or distributed over workers.
"""

from __future__ import annotations

import numpy as np

# stream identifiers
INITIAL = 0  # initial field noise
PHONON = 1  # thermal part of the phonon initial amplitudes (all orderings)
PHONON_VAC = 2  # Wigner vacuum part of the phonon amplitudes
ABSORBER = 3
KERR = 4  # +P electronic noise
RAMAN = 5  # +P Raman noise


def stream(master_seed: int, traj: int, pol: int, stream_id: int) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(traj), int(pol), int(stream_id)))
    return np.random.Generator(np.random.Philox(ss))


class StreamSet:
    """Generators for a list of (traj, pol) rows and one stream id.

    ``normal(*shape)`` returns an array (rows, *shape) with row i taken
    from the i-th trajectory's generator.  Draws are buffered in chunks;
    since each row consumes its own stream strictly in order, the values
    do not depend on the chunking or on which rows share a block.
    """

    def __init__(self, master_seed: int, rows: list[tuple[int, int]], stream_id: int, chunk: int = 4096):
        self.master_seed = master_seed
        self.rows = list(rows)
        self.stream_id = stream_id
        self.chunk = chunk
        self._gens = None  # created on first use; many runs never touch some streams
        self._buf = np.empty((len(self.rows), 0))
        self._pos = 0

    @property
    def gens(self) -> list[np.random.Generator]:
        if self._gens is None:
            self._gens = [stream(self.master_seed, t, p, self.stream_id) for t, p in self.rows]
        return self._gens

    def normal(self, *shape: int) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        avail = self._buf.shape[1] - self._pos
        if avail < n:
            # the first refill draws exactly what is asked (single-use streams)
            extra = n - avail if self._gens is None else max(n - avail, self.chunk)
            gens = self.gens
            fresh = np.empty((len(gens), avail + extra))
            fresh[:, :avail] = self._buf[:, self._pos:]
            for i, g in enumerate(gens):
                fresh[i, avail:] = g.standard_normal(extra)
            self._buf = fresh
            self._pos = 0
        out = self._buf[:, self._pos:self._pos + n]
        self._pos += n
        return out.reshape((len(self.rows),) + tuple(shape))

    def __len__(self):
        return len(self.rows)
