"""Independent scalar re-implementations used as test oracles.

Nothing here imports from sensodim; rotations are built by multiplying the
three elementary matrices instead of the closed form used in the package.
"""

import math


def _matmul(A, B):
    return [[sum(A[i][k] * B[k][j] for k in range(3)) for j in range(3)] for i in range(3)]


def _matvec(A, v):
    return [sum(A[i][k] * v[k] for k in range(3)) for i in range(3)]


def _transpose(A):
    return [[A[j][i] for j in range(3)] for i in range(3)]


def rotation(pitch_deg, roll_deg, tilt_deg):
    a, b, g = (math.radians(x) for x in (pitch_deg, roll_deg, tilt_deg))
    rx = [[1, 0, 0], [0, math.cos(a), -math.sin(a)], [0, math.sin(a), math.cos(a)]]
    ry = [[math.cos(b), 0, math.sin(b)], [0, 1, 0], [-math.sin(b), 0, math.cos(b)]]
    rz = [[math.cos(g), -math.sin(g), 0], [math.sin(g), math.cos(g), 0], [0, 0, 1]]
    return _matmul(rz, _matmul(ry, rx))


def source_position(theta_deg, phi_deg, radius):
    t, p = math.radians(theta_deg), math.radians(phi_deg)
    return [radius * math.cos(p) * math.sin(t), radius * math.cos(p) * math.cos(t), radius * math.sin(p)]


def cone_excitation(cone_xy, eye, config, eye_offsets, radius=100.0, a=1e-3, focal=1.0):
    """Excitation of one cone of eye ``eye`` (0 left, 1 right) for a configuration vector."""
    ns = (len(config) - 9) // 2
    R_head = rotation(*config[0:3])
    R_eye = _matmul(R_head, rotation(*config[3 + 3 * eye : 6 + 3 * eye]))
    pos = _matvec(R_head, list(eye_offsets[eye]))
    total = 0.0
    for k in range(ns):
        src = source_position(config[9 + k], config[9 + ns + k], radius)
        rel = [src[i] - pos[i] for i in range(3)]
        q = _matvec(_transpose(R_eye), rel)
        if q[1] <= 0:
            continue
        px, py = -focal * q[0] / q[1], -focal * q[2] / q[1]
        d2_retina = (cone_xy[0] - px) ** 2 + (cone_xy[1] - py) ** 2
        d2_source = sum(r * r for r in rel)
        total += a * math.exp(-d2_retina) / d2_source
    return total


def cca_cost_bruteforce(X_points, Y_points, lam):
    """1/2 sum over ordered pairs i != j of (X_ij - Y_ij)^2 [Y_ij <= lam]."""
    n = len(X_points)
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            xij = math.dist(X_points[i], X_points[j])
            yij = math.dist(Y_points[i], Y_points[j])
            if yij <= lam:
                total += (xij - yij) ** 2
    return 0.5 * total
