"""Prime-order group arithmetic, the one-way function x -> g^x, seeded randomness."""
import hashlib
import json
import random
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from math import isqrt

from sympy import isprime

BRUTE_FORCE_LIMIT = 2**24


class GroupTooLarge(Exception):
    pass


def immutable(cls):
    """Frozen value type: copies and deep copies share the instance."""
    cls.__copy__ = lambda self: self
    cls.__deepcopy__ = lambda self, memo: self
    return cls


@immutable
@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int
    name: str = ""

    def validate(self):
        if not (isprime(self.p) and isprime(self.q)):
            raise ValueError(f"{self.name}: p and q must be prime")
        if (self.p - 1) % self.q:
            raise ValueError(f"{self.name}: q does not divide p-1")
        if self.g % self.p == 1 or pow(self.g, self.q, self.p) != 1:
            raise ValueError(f"{self.name}: g does not generate the order-q subgroup")
        return self

    def is_element(self, y) -> bool:
        return isinstance(y, int) and 0 < y < self.p and pow(y, self.q, self.p) == 1

    def is_scalar(self, x) -> bool:
        return isinstance(x, int) and 0 <= x < self.q

    def exp(self, base, x):
        return pow(base, x % self.q, self.p)

    def mul(self, *elems):
        acc = 1
        for e in elems:
            acc = acc * e % self.p
        return acc

    def inv(self, y):
        return pow(y, -1, self.p)

    def scalar_inv(self, x):
        return pow(x, -1, self.q)

    @property
    def brute_forceable(self):
        return self.q <= BRUTE_FORCE_LIMIT

    def to_json(self):
        return {"name": self.name, "p": hex(self.p), "q": hex(self.q), "g": hex(self.g)}

    @classmethod
    def from_json(cls, d):
        return cls(int(d["p"], 16), int(d["q"], 16), int(d["g"], 16), d.get("name", ""))


@lru_cache(maxsize=None)
def _fixture():
    text = resources.files("nmcom").joinpath("data/groups.json").read_text()
    return {d["name"]: d for d in json.loads(text)}


@lru_cache(maxsize=None)
def group_profile(name: str) -> GroupParams:
    profiles = _fixture()
    if name not in profiles:
        raise KeyError(f"unknown group profile {name!r}; choose from {sorted(profiles)}")
    return GroupParams.from_json(profiles[name]).validate()


def f_eval(params: GroupParams, x: int) -> int:
    if not params.is_scalar(x):
        raise ValueError("exponent out of range")
    return pow(params.g, x, params.p)


@lru_cache(maxsize=8)
def _baby_steps(params: GroupParams):
    m = isqrt(params.q) + 1
    table = {}
    e = 1
    for j in range(m):
        table.setdefault(e, j)
        e = e * params.g % params.p
    return m, table


def dlog_bruteforce(params: GroupParams, y):
    """Exhaustive discrete log in a small group; None if y is outside the subgroup.

    Baby-step giant-step keeps test-q20 lookups cheap; the search still covers
    every exponent in [0, q).
    """
    if not params.brute_forceable:
        raise GroupTooLarge(f"q has {params.q.bit_length()} bits; brute force is capped at 2^24")
    if not params.is_element(y):
        return None
    m, table = _baby_steps(params)
    giant = pow(params.g, -m, params.p)
    gamma = y
    for i in range(m + 1):
        j = table.get(gamma)
        if j is not None:
            return (i * m + j) % params.q
        gamma = gamma * giant % params.p
    return None


class Rng:
    """Deterministic randomness with labelled, order-independent splitting."""

    def __init__(self, seed: int, path: tuple = ()):
        self.seed = seed & (2**64 - 1)
        self.path = tuple(path)
        digest = hashlib.sha256(repr((self.seed, self.path)).encode()).digest()
        self._r = random.Random(int.from_bytes(digest, "big"))

    def split(self, *labels) -> "Rng":
        return Rng(self.seed, self.path + tuple(labels))

    def scalar(self, q: int) -> int:
        return self._r.randrange(q)

    def nonzero_scalar(self, q: int) -> int:
        return 1 + self._r.randrange(q - 1)

    def below(self, n: int) -> int:
        return self._r.randrange(n)

    def bits(self, n: int) -> tuple:
        return tuple(self._r.getrandbits(1) for _ in range(n))

    def random(self) -> float:
        return self._r.random()

    def choice(self, seq):
        return seq[self._r.randrange(len(seq))]

    def shuffle(self, seq):
        self._r.shuffle(seq)

    def randbytes(self, n: int) -> bytes:
        return self._r.randbytes(n)

    def __deepcopy__(self, memo):
        # the generator state is an immutable tuple; share it instead of copying 625 ints one by one
        clone = object.__new__(Rng)
        clone.seed, clone.path = self.seed, self.path
        clone._r = random.Random()
        clone._r.setstate(self._r.getstate())
        memo[id(self)] = clone
        return clone

    def __repr__(self):
        return f"Rng(seed={self.seed}, path={self.path})"
