# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled pairwise-quadrature loops for contour velocities.

Each target row is reduced over sources in a fixed sequential order
(k = 0 .. N-1), so results are bit-identical no matter how target rows are
distributed over worker threads.  Two quadrature variants are implemented:

* spectral log-split: the log-singular factor of the scalar kernel is
  integrated with exact circulant weights (``logw``) against its smooth
  coefficient, and the analytic remainder with the plain trapezoid rule;
* punctured trapezoid: plain trapezoid skipping the singular source node.

Special-function evaluations use scipy's Cephes routines via
``scipy.special.cython_special`` (nogil).
"""
from libc.math cimport M_PI, fabs, log, sin, sqrt

from scipy.special.cython_special cimport i0 as c_i0
from scipy.special.cython_special cimport k0 as c_k0

cdef double TWO_PI = 2.0 * M_PI
cdef double EULER_GAMMA = 0.57721566490153286061


def velocity_rows(const double[:, ::1] nodes,
                  const double[:, ::1] tangents,
                  int mode,              # 0 = screened, 1 = euler
                  double eps,
                  double shift,
                  const double[::1] logw,  # length N => log-split; length 0 => punctured
                  Py_ssize_t lo,
                  Py_ssize_t hi,
                  double[:, ::1] out):
    cdef Py_ssize_t n = nodes.shape[0]
    cdef bint split = logw.shape[0] == n
    cdef double h = TWO_PI / n
    cdef Py_ssize_t j, k, idx
    cdef double dx, dy, d, s, z, i0v, a, b, w, vx, vy, tn
    with nogil:
        for j in range(lo, hi):
            vx = 0.0
            vy = 0.0
            for k in range(n):
                if split:
                    if k == j:
                        tn = sqrt(tangents[j, 0] * tangents[j, 0] + tangents[j, 1] * tangents[j, 1])
                        a = -1.0 / TWO_PI
                        if mode == 0:
                            b = (-log(eps * tn / 2.0) - EULER_GAMMA) / TWO_PI + shift
                        else:
                            b = -log(tn) / TWO_PI + shift
                        w = logw[0] * a + h * b
                    else:
                        dx = nodes[j, 0] - nodes[k, 0]
                        dy = nodes[j, 1] - nodes[k, 1]
                        d = sqrt(dx * dx + dy * dy)
                        s = 2.0 * fabs(sin(M_PI * <double>(j - k) / <double>n))
                        idx = j - k
                        if idx < 0:
                            idx = -idx
                        if mode == 0:
                            z = eps * d
                            i0v = c_i0(z)
                            a = -i0v / TWO_PI
                            b = (c_k0(z) + log(s) * i0v) / TWO_PI + shift
                        else:
                            a = -1.0 / TWO_PI
                            b = -log(d / s) / TWO_PI + shift
                        w = logw[idx] * a + h * b
                else:
                    if k == j:
                        continue
                    dx = nodes[j, 0] - nodes[k, 0]
                    dy = nodes[j, 1] - nodes[k, 1]
                    d = sqrt(dx * dx + dy * dy)
                    if mode == 0:
                        w = h * (c_k0(eps * d) / TWO_PI + shift)
                    else:
                        w = h * (-log(d) / TWO_PI + shift)
                vx += w * tangents[k, 0]
                vy += w * tangents[k, 1]
            out[j - lo, 0] = vx
            out[j - lo, 1] = vy


def point_velocity_rows(const double[:, ::1] nodes,
                        const double[:, ::1] tangents,
                        const double[:, ::1] points,
                        int mode,
                        double eps,
                        double shift,
                        Py_ssize_t lo,
                        Py_ssize_t hi,
                        double[:, ::1] out):
    """Plain trapezoid of the scalar kernel against the tangent, evaluated at
    off-contour points (the integrand is smooth there)."""
    cdef Py_ssize_t n = nodes.shape[0]
    cdef double h = TWO_PI / n
    cdef Py_ssize_t m, k
    cdef double dx, dy, d, w, vx, vy
    with nogil:
        for m in range(lo, hi):
            vx = 0.0
            vy = 0.0
            for k in range(n):
                dx = points[m, 0] - nodes[k, 0]
                dy = points[m, 1] - nodes[k, 1]
                d = sqrt(dx * dx + dy * dy)
                if mode == 0:
                    w = h * (c_k0(eps * d) / TWO_PI + shift)
                else:
                    w = h * (-log(d) / TWO_PI + shift)
                vx += w * tangents[k, 0]
                vy += w * tangents[k, 1]
            out[m - lo, 0] = vx
            out[m - lo, 1] = vy
