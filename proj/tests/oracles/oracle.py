"""Independent reference values for the test suite.

Run `python3 tests/oracles/oracle.py > tests/oracles/frozen.hpp` to regenerate.
Uses numpy/scipy only; shares no code with the C++ library.
"""
import math

import numpy as np
from scipy.linalg import expm

A = np.array([[-0.5, 0.3], [-0.2, -0.4]])
Q = np.array([[0.2, 0.05], [0.05, 0.1]])
X0 = np.array([1.0, -0.5])
H = [np.array([1.0, 0.0]), np.array([1.0, 1.0])]
R = [0.3 ** 2, 0.5 ** 2]
GAP = 0.5
N_TIMES = 25
EM_DT = 0.1


def van_loan(a, q, h):
    k = a.shape[0]
    m = np.zeros((2 * k, 2 * k))
    m[:k, :k] = -a
    m[:k, k:] = q
    m[k:, k:] = a.T
    e = expm(m * h)
    f = e[k:, k:].T
    return f, f @ e[:k, k:]


def simulate(seed):
    rng = np.random.default_rng(seed)
    f, qd = van_loan(A, Q, GAP)
    lq = np.linalg.cholesky(qd)
    x = X0.copy()
    frames = []
    for i in range(N_TIMES):
        x = f @ x + lq @ rng.standard_normal(2)
        t = GAP * (i + 1)
        for s in range(2):
            frames.append((t, s, float(H[s] @ x + math.sqrt(R[s]) * rng.standard_normal())))
    return frames


def kalman(frames, transition):
    m, p = X0.copy(), np.zeros((2, 2))
    t, ll = 0.0, 0.0
    for time, s, y in frames:
        if time > t:
            f, qd = transition(time - t)
            m, p = f @ m, f @ p @ f.T + qd
            t = time
        h = H[s]
        sv = h @ p @ h + R[s]
        nu = y - h @ m
        ll += -0.5 * (math.log(2 * math.pi * sv) + nu * nu / sv)
        k = p @ h / sv
        m = m + k * nu
        ikh = np.eye(2) - np.outer(k, h)
        p = ikh @ p @ ikh.T + R[s] * np.outer(k, k)
    return ll


def exact(h):
    return van_loan(A, Q, h)


def euler(h):
    n = int(round(h / EM_DT))
    f1 = np.eye(2) + EM_DT * A
    f, qd = np.eye(2), np.zeros((2, 2))
    for _ in range(n):
        f, qd = f1 @ f, f1 @ qd @ f1.T + EM_DT * Q
    return f, qd


def main():
    frames = simulate(7)
    p0 = np.array([[0.3, 0.1], [0.1, 0.2]])
    f, qd = van_loan(A, Q, GAP)
    m1, p1 = f @ X0, f @ p0 @ f.T + qd

    out = ["#pragma once", "// Generated by tests/oracles/oracle.py; do not edit.", "",
           "namespace oracle {", "", "struct LgFrame {", "  double time;", "  int stream;", "  double value;", "};", ""]
    out.append("inline constexpr LgFrame kLinearGaussianFrames[] = {")
    for t, s, y in frames:
        out.append(f"    {{{t!r}, {s}, {y!r}}},")
    out.append("};")
    out.append(f"inline constexpr double kLinearGaussianExactLoglik = {float(kalman(frames, exact))!r};")
    out.append(f"inline constexpr double kLinearGaussianEulerLoglik = {float(kalman(frames, euler))!r};")
    out.append(f"inline constexpr double kPredictMean[2] = {{{float(m1[0])!r}, {float(m1[1])!r}}};")
    out.append(f"inline constexpr double kPredictCov[3] = {{{float(p1[0,0])!r}, {float(p1[0,1])!r}, {float(p1[1,1])!r}}};")
    out.append(f"inline constexpr double kAdaptScaleExample = {math.exp(0.99 ** 10 * 0.1)!r};")
    out.append(f"inline constexpr double kLogOf13 = {math.log(13.0)!r};")
    out += ["", "}  // namespace oracle", ""]
    print("\n".join(out))


if __name__ == "__main__":
    main()
