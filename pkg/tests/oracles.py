"""Classical reduced equations of motion written out term by term, independent of the package internals.

Only partial derivatives of L, H and the connection are taken from jets; all
assembly is written out here term by term.
"""

import numpy as np

from contact_algebroid import parse_field, so3_constants

ATIYAH_CONNECTION = [["q2", "0.5*sin(q1)"], ["0.3*q1*q2", "0"], ["0.2", "q1^2"]]


def _parts(f, st):
    return f.bundle(st.q, st.w, st.s)


def herglotz_standard(L, st):
    """Tangent bundle: d/dt L_y - L_q = L_y L_s, dq = y, ds = L."""
    b = _parts(L, st)
    y = st.w
    target = b.grad_q + b.grad_w * b.d_s
    ydot = np.linalg.solve(b.hess_ww, target - b.mixed_qw.T @ y - b.mixed_sw * b.value)
    return y.copy(), ydot, b.value


def contact_hamilton_standard(H, st):
    """Darboux form: dq = H_p, dp = -(H_q + p H_s), ds = p H_p - H."""
    b = _parts(H, st)
    p = st.w
    return b.grad_w.copy(), -(b.grad_q + p * b.d_s), float(p @ b.grad_w - b.value)


def euler_poincare_herglotz(L, st, c=None):
    """d/dt L_A + C^D_AB y^B L_D = L_s L_A, ds = L (no base)."""
    c = so3_constants() if c is None else c
    b = _parts(L, st)
    y = st.w
    m = y.size
    target = np.zeros(m)
    for a in range(m):
        target[a] = b.d_s * b.grad_w[a]
        for bb in range(m):
            for d in range(m):
                target[a] -= c[d, a, bb] * y[bb] * b.grad_w[d]
    ydot = np.linalg.solve(b.hess_ww, target - b.mixed_sw * b.value)
    return ydot, b.value


def lie_poisson_jacobi(H, st, c=None):
    """dp_A = -C^D_AB p_D H_B - p_A H_s, ds = p_A H_A - H."""
    c = so3_constants() if c is None else c
    b = _parts(H, st)
    p = st.w
    m = p.size
    dp = np.zeros(m)
    for a in range(m):
        dp[a] = -p[a] * b.d_s
        for bb in range(m):
            for d in range(m):
                dp[a] -= c[d, a, bb] * p[d] * b.grad_w[bb]
    return dp, float(p @ b.grad_w - b.value)


def connection_data(q, rows=ATIYAH_CONNECTION, c=None):
    """A^A_i(q) and B^A_ij = d_i A^A_j - d_j A^A_i - c^A_EF A^E_i A^F_j."""
    c = so3_constants() if c is None else c
    d, n = len(rows), len(rows[0])
    a = np.zeros((d, n))
    da = np.zeros((d, n, n))  # da[A, j, i] = d A^A_j / dq^i
    for k, row in enumerate(rows):
        for j, text in enumerate(row):
            bnd = parse_field(text, n).bundle(q)
            a[k, j] = bnd.value
            da[k, j] = bnd.grad_q
    curv = np.zeros((d, n, n))
    for k in range(d):
        for i in range(n):
            for j in range(n):
                curv[k, i, j] = da[k, j, i] - da[k, i, j]
                for e in range(d):
                    for f in range(d):
                        curv[k, i, j] -= c[k, e, f] * a[e, i] * a[f, j]
    return a, curv


def lagrange_poincare_herglotz(L, st, rows=ATIYAH_CONNECTION, c=None):
    """Fiber coordinates (qdot, v).

    L_qj - d/dt L_qdotj = L_vA (B^A_ij qdot^i + c^A_DB A^B_j v^D) - L_s L_qdotj
    d/dt L_vB = L_vA (c^A_DB v^D - c^A_DB A^D_i qdot^i) + L_s L_vB
    """
    c = so3_constants() if c is None else c
    b = _parts(L, st)
    n, d = st.q.size, c.shape[0]
    qd, v = st.w[:n], st.w[n:]
    l_qd, l_v = b.grad_w[:n], b.grad_w[n:]
    a, curv = connection_data(st.q, rows, c)
    target = np.zeros(n + d)
    for j in range(n):
        force = 0.0
        for aa in range(d):
            inner = sum(curv[aa, i, j] * qd[i] for i in range(n))
            inner += sum(c[aa, dd, bb] * a[bb, j] * v[dd] for dd in range(d) for bb in range(d))
            force += l_v[aa] * inner
        target[j] = b.grad_q[j] - force + b.d_s * l_qd[j]
    for bb in range(d):
        total = 0.0
        for aa in range(d):
            total += l_v[aa] * sum(c[aa, dd, bb] * v[dd] for dd in range(d))
            total -= l_v[aa] * sum(c[aa, dd, bb] * a[dd, i] * qd[i] for dd in range(d) for i in range(n))
        target[n + bb] = total + b.d_s * l_v[bb]
    ydot = np.linalg.solve(b.hess_ww, target - b.mixed_qw.T @ qd - b.mixed_sw * b.value)
    return qd.copy(), ydot, b.value


def hamilton_poincare_herglotz(H, st, rows=ATIYAH_CONNECTION, c=None):
    """Momenta (p, pbar).

    dq^i = H_pi
    dp_i = -H_qi + B^A_ij pbar_A H_pj - c^C_AB A^B_i pbar_C H_pbarA - p_i H_s
    dpbar_A = c^C_AB A^B_i pbar_C H_pi - c^C_AB pbar_C H_pbarB - pbar_A H_s
    ds = p_i H_pi + pbar_A H_pbarA - H
    """
    c = so3_constants() if c is None else c
    b = _parts(H, st)
    n, d = st.q.size, c.shape[0]
    p, pb = st.w[:n], st.w[n:]
    h_p, h_pb = b.grad_w[:n], b.grad_w[n:]
    a, curv = connection_data(st.q, rows, c)
    dp = np.zeros(n)
    for i in range(n):
        dp[i] = -b.grad_q[i] - p[i] * b.d_s
        for aa in range(d):
            dp[i] += sum(curv[aa, i, j] * pb[aa] * h_p[j] for j in range(n))
            for bb in range(d):
                for cc in range(d):
                    dp[i] -= c[cc, aa, bb] * a[bb, i] * pb[cc] * h_pb[aa]
    dpb = np.zeros(d)
    for aa in range(d):
        dpb[aa] = -pb[aa] * b.d_s
        for bb in range(d):
            for cc in range(d):
                dpb[aa] += sum(c[cc, aa, bb] * a[bb, i] * pb[cc] * h_p[i] for i in range(n))
                dpb[aa] -= c[cc, aa, bb] * pb[cc] * h_pb[bb]
    ds = float(p @ h_p + pb @ h_pb - b.value)
    return h_p.copy(), np.concatenate([dp, dpb]), ds
