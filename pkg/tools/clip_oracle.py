"""Straight-line reference for one SGD-C / ADAM-C step on a 2-D instance.

Same contract as step_oracle.py: plain Python floats, no library imports.
The raw gradient (3, -4) has norm 5, so the unit-ball projection is
(0.6, -0.8) exactly. Printed values are frozen into tests/test_clip.py.
"""

import math

X = (1.0, -1.0)
M = (0.2, -0.1)
V = (0.3, 0.05)
G = (3.0, -4.0)
ETA = 0.1
TAU1 = 1.0
TAU2 = 1.0
C = 1.0
EPS = 1e-8
ALPHA = 0.1


def sign(t):
    return (t > 0) - (t < 0)


def clip_ball(g, c):
    norm = math.hypot(*g)
    if norm <= c:
        return g
    return tuple(t * (c / norm) for t in g)


def main():
    print("# state: x=%r m=%r v=%r g=%r" % (X, M, V, G))
    print("# eta=%r tau1=%r tau2=%r C=%r eps=%r alpha=%r, ball, scaling off" %
          (ETA, TAU1, TAU2, C, EPS, ALPHA))
    t1 = TAU1 * ETA
    t2 = TAU2 * ETA
    gh = clip_ball(G, C)
    print("ghat = [%s]" % ", ".join(repr(t) for t in gh))
    m1 = [(1.0 - t1) * m + t1 * g for m, g in zip(M, gh)]
    print("m1 = [%s]" % ", ".join(repr(t) for t in m1))

    x1 = [x - ETA * (m + ALPHA * g) for x, m, g in zip(X, m1, gh)]
    print("sgdc x1 = [%s]" % ", ".join(repr(t) for t in x1))

    variants = {
        "first_moment": [(1.0 - t2) * v + t2 * abs(g) for v, g in zip(V, gh)],
        "adabelief_c": [(1.0 - t2) * v + t2 * abs(g - m)
                        for v, g, m in zip(V, gh, m1)],
        "amsgrad_c": [max(v, abs(g)) for v, g in zip(V, gh)],
        "yogi_c": [v - t2 * sign(v - abs(g)) * abs(g) for v, g in zip(V, gh)],
    }
    for name, v1 in variants.items():
        x1 = [x - ETA * (m + ALPHA * graw) / (abs(v) + EPS)
              for x, m, v, graw in zip(X, m1, v1, G)]
        print(f"adamc {name}:")
        print("  v1 = [%s]" % ", ".join(repr(t) for t in v1))
        print("  x1 = [%s]" % ", ".join(repr(t) for t in x1))

    # clip_nesterov=True swaps raw g for ghat in the x update only
    v1 = variants["first_moment"]
    x1 = [x - ETA * (m + ALPHA * g) / (abs(v) + EPS)
          for x, m, v, g in zip(X, m1, v1, gh)]
    print("adamc first_moment, clip_nesterov:")
    print("  x1 = [%s]" % ", ".join(repr(t) for t in x1))


if __name__ == "__main__":
    main()
