"""Search for the test-q20 group and write the pinned fixture.

Run once; the output is committed as src/nmcom/data/groups.json.
"""
import json
import sys
from pathlib import Path

from sympy import isprime, prevprime

MODP1536 = int(
    "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74"
    "020BBEA63B139B22514A08798E3404DDEF9519B3CD3A431B302B0A6DF25F1437"
    "4FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
    "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF05"
    "98DA48361C55D39A69163FA8FD24CF5F83655D23DCA3AD961C62F356208552BB"
    "9ED529077096966D670C354E4ABC9804F1746C08CA237327FFFFFFFFFFFFFFFF",
    16,
)


def search_q20():
    q = prevprime(2**20)
    k = 2
    while not isprime(k * q + 1):
        k += 2
    p = k * q + 1
    h = 2
    while pow(h, k, p) == 1:
        h += 1
    return p, q, pow(h, k, p)


def main(out):
    p, q, g = search_q20()
    profiles = [
        {"name": "test23", "p": hex(23), "q": hex(11), "g": hex(2)},
        {"name": "test-q20", "p": hex(p), "q": hex(q), "g": hex(g)},
        {"name": "modp1536", "p": hex(MODP1536), "q": hex((MODP1536 - 1) // 2), "g": hex(2)},
    ]
    Path(out).write_text(json.dumps(profiles, indent=2) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/nmcom/data/groups.json")
