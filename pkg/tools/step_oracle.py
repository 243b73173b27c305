"""Straight-line reference for one optimizer step, per variant.

Evaluates the update formulas coordinate by coordinate with plain Python
floats and no imports from the library, so it stays independent of the
implementation under test. Run it once, then freeze the printed values
into tests/test_optim.py. Any later drift between engine and formulas
shows up as a test failure against these literals.
"""

import math

X = (1.0, -1.0, 0.5)
M = (0.2, 0.0, -0.3)
V = (0.04, 0.01, 2.0)
G = (1.0, -1.0, 0.25)
ETA = 0.1
TAU1 = 1.0
TAU2 = 1.0
EPS = 1e-8
GAMMA = 0.5


def sign(t):
    return (t > 0) - (t < 0)


def one_step(variant, alpha):
    t1 = TAU1 * ETA
    t2 = TAU2 * ETA
    m1 = [(1.0 - t1) * m + t1 * g for m, g in zip(M, G)]
    if variant in ("adam", "nadam"):
        v1 = [(1.0 - t2) * v + t2 * g * g for v, g in zip(V, G)]
    elif variant == "adabelief":
        v1 = [(1.0 - t2) * v + t2 * (g - m) ** 2 for v, g, m in zip(V, G, m1)]
    elif variant == "amsgrad":
        v1 = [max(v, g * g) for v, g in zip(V, G)]
    elif variant == "yogi":
        v1 = [v - t2 * sign(v - g * g) * g * g for v, g in zip(V, G)]
    else:
        raise ValueError(variant)
    x1 = [
        x - ETA * (abs(v) + EPS) ** (-GAMMA) * (m + alpha * g)
        for x, m, v, g in zip(X, m1, v1, G)
    ]
    return m1, v1, x1


def main():
    print("# state: x=%r m=%r v=%r g=%r" % (X, M, V, G))
    print("# eta=%r tau1=%r tau2=%r eps=%r gamma=%r, scaling off" %
          (ETA, TAU1, TAU2, EPS, GAMMA))
    for variant in ("adam", "adabelief", "amsgrad", "nadam", "yogi"):
        alpha = 0.1 if variant == "nadam" else 0.0
        m1, v1, x1 = one_step(variant, alpha)
        print(f"{variant} (alpha={alpha}):")
        print("  m1 = [%s]" % ", ".join(repr(t) for t in m1))
        print("  v1 = [%s]" % ", ".join(repr(t) for t in v1))
        print("  x1 = [%s]" % ", ".join(repr(t) for t in x1))

    # bias correction factors under a constant stepsize: after k calls the
    # running product is (1 - tau*eta)^k, so the factor is 1/(1 - 0.9^k)
    print("rho sequence (tau*eta = 0.1):")
    for k in (1, 2, 3, 10, 100):
        print("  k=%d rho=%r" % (k, 1.0 / (1.0 - 0.9 ** k)))


if __name__ == "__main__":
    main()
