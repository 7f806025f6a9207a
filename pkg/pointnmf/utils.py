from typing import Iterator, List, Sequence

import numpy as np


def batch(iterable: Sequence, n=1):
    """Split a sequence into multiple sequences of size n."""
    l = len(iterable)
    for ndx in range(0, l, n):
        yield iterable[ndx : min(ndx + n, l)]


def child_seeds(seed: int, n: int) -> List[int]:
    """Derive n independent integer seeds from one seed, deterministically."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1, dtype=np.uint32)[0]) for c in children]


def format_float(value: float) -> str:
    """Shortest text that parses back to exactly the same float."""
    return repr(float(value))


class ProxyBase:
    """
    Forward item and attribute access to __subject__, unless the attribute is
    defined on the proxy class itself or named in __noproxy__.
    """

    __noproxy__ = ()

    @property
    def __subject__(self):
        raise NotImplementedError()

    def __getattr__(self, attr):
        return getattr(self.__subject__, attr)

    def __setattr__(self, attr, val):
        if attr in type(self).__noproxy__:
            object.__setattr__(self, attr, val)
        else:
            setattr(self.__subject__, attr, val)

    def __getitem__(self, key):
        return self.__subject__[key]

    def __setitem__(self, key, val):
        self.__subject__[key] = val

    def __contains__(self, key):
        return key in self.__subject__

    def __iter__(self) -> Iterator:
        return iter(self.__subject__)

    def __len__(self):
        return len(self.__subject__)

    def __repr__(self):
        return f"{type(self).__name__}({self.__subject__!r})"
