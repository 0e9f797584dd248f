"""Brute-force value iteration for the small MDPs in learner_test.cpp.

Run with python3; prints the optimal action values the test freezes.
The model is written with exact fractions; the sweeps run in double
precision until the largest value change drops below 1e-15.
"""
from fractions import Fraction as F

# (state, action) -> list of (probability, reward, next_state)
TWO = {
    "discount": F(9, 10),
    "states": 2,
    "actions": 2,
    "model": {
        (0, 0): [(F(1), F(1), 0)],
        (0, 1): [(F(1), F(0), 1)],
        (1, 0): [(F(1, 2), F(2), 0), (F(1, 2), F(0), 1)],
        (1, 1): [(F(1), F(1, 2), 1)],
    },
}

FIVE = {
    "discount": F(95, 100),
    "states": 5,
    "actions": 3,
    "model": {
        (0, 0): [(F(1), F(0), 1)],
        (0, 1): [(F(3, 4), F(0), 0), (F(1, 4), F(1, 10), 2)],
        (0, 2): [(F(1), F(-1, 2), 4)],
        (1, 0): [(F(1), F(0), 2)],
        (1, 1): [(F(1, 2), F(1, 5), 0), (F(1, 2), F(0), 1)],
        (1, 2): [(F(1, 3), F(1), 3), (F(2, 3), F(0), 1)],
        (2, 0): [(F(1), F(0), 3)],
        (2, 1): [(F(1), F(3, 10), 2)],
        (2, 2): [(F(1, 5), F(2), 4), (F(4, 5), F(0), 0)],
        (3, 0): [(F(1), F(1), 4)],
        (3, 1): [(F(1, 2), F(0), 3), (F(1, 2), F(1, 2), 2)],
        (3, 2): [(F(1), F(0), 0)],
        (4, 0): [(F(1), F(1, 4), 4)],
        (4, 1): [(F(1), F(0), 0)],
        (4, 2): [(F(1, 2), F(3, 2), 1), (F(1, 2), F(0), 3)],
    },
}


def solve(mdp):
    g, n, m, model = mdp["discount"], mdp["states"], mdp["actions"], mdp["model"]
    v = [0.0] * n
    while True:
        q = [[sum(float(p) * (float(r) + float(g) * v[s2]) for p, r, s2 in model[(s, a)])
              for a in range(m)] for s in range(n)]
        nv = [max(row) for row in q]
        if max(abs(a - b) for a, b in zip(v, nv)) < 1e-15:
            return q
        v = nv


for name, mdp in (("two", TWO), ("five", FIVE)):
    print(name)
    for row in solve(mdp):
        print("  {" + ", ".join(f"{x:.15f}" for x in row) + "},")
