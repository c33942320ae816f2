"""Lock and epoch-reclamation plumbing shared by the index internals."""

from __future__ import annotations

import threading


class NullLock:
    """No-op lock for the single-threaded build profile."""

    def acquire(self, blocking: bool = True, timeout: float = -1) -> bool:
        return True

    def release(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def make_lock(thread_safe: bool):
    return threading.Lock() if thread_safe else NullLock()


class EpochDomain:
    """Deferred reclamation of retired leaves.

    Readers pin the current epoch for the duration of an operation; a leaf
    retired at epoch e is only freed once every active pin is newer than e,
    so an in-flight reader can never touch freed memory.
    """

    def __init__(self, batch_size: int = 64):
        self._lock = threading.Lock()
        self._epoch = 0
        self._pins: dict[int, list[int]] = {}  # thread id -> [epoch, depth]
        self._retired: list[tuple[int, object]] = []
        self.batch_size = batch_size
        self.freed_count = 0

    def pin(self) -> None:
        tid = threading.get_ident()
        with self._lock:
            slot = self._pins.get(tid)
            if slot is None:
                self._pins[tid] = [self._epoch, 1]
            else:
                slot[1] += 1

    def unpin(self) -> None:
        tid = threading.get_ident()
        with self._lock:
            slot = self._pins[tid]
            slot[1] -= 1
            if slot[1] == 0:
                del self._pins[tid]

    def retire(self, leaf) -> None:
        with self._lock:
            self._retired.append((self._epoch, leaf))
            self._epoch += 1
            if len(self._retired) >= self.batch_size:
                self._reclaim_locked()

    def reclaim(self) -> None:
        with self._lock:
            self._reclaim_locked()

    def _reclaim_locked(self) -> None:
        if not self._retired:
            return
        horizon = min((e for e, _ in self._pins.values()), default=None)
        survivors = []
        for epoch, leaf in self._retired:
            if horizon is None or epoch < horizon:
                leaf.poison()
                self.freed_count += 1
            else:
                survivors.append((epoch, leaf))
        self._retired = survivors

    @property
    def retired_count(self) -> int:
        with self._lock:
            return len(self._retired)
