# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``."""

from libc.math cimport log2, sqrt

cdef double INV_PHI = (sqrt(5.0) - 1.0) / 2.0


cdef inline double _h2(double e) noexcept nogil:
    if e <= 0.0 or e >= 1.0:
        return 0.0
    return -e * log2(e) - (1.0 - e) * log2(1.0 - e)


cdef inline double _objective(double x, double c0, double c1, double r0, double r1,
                              double r2, double r, double E_t, double E_nt) noexcept nogil:
    cdef double xi = (r2 - r - (r2 - r0) * x) / (r2 - r1)
    cdef double eps_t, eps_nt, eps
    if xi <= 0.0:
        return c0 * x
    eps_t = (2.0 * r * E_t - r0 * x) / (2.0 * r1 * xi)
    eps_nt = (2.0 * E_nt - x) / (2.0 * xi)
    eps = eps_t if eps_t < eps_nt else eps_nt
    if eps < 0.0:
        eps = 0.0
    elif eps > 0.5:
        eps = 0.5
    return c0 * x + c1 * xi * (1.0 - _h2(eps))


def bracket_objective_scalar(double x, double c0, double c1, double r0, double r1,
                             double r2, double r, double E_t, double E_nt):
    return _objective(x, c0, c1, r0, r1, r2, r, E_t, E_nt)


def minimize_bracket(double c0, double c1, double r0, double r1, double r2, double r,
                     double E_t, double E_nt, double x_hi, Py_ssize_t n_grid, double rel_tol):
    cdef double x, fx, x_best = 0.0, f_best, lo, hi, a, b, c, d, fc, fd, step, tol
    cdef Py_ssize_t i, i_best = 0, it = 0
    if x_hi <= 0.0:
        return 0.0, _objective(0.0, c0, c1, r0, r1, r2, r, E_t, E_nt)
    with nogil:
        step = x_hi / (n_grid - 1)
        f_best = _objective(0.0, c0, c1, r0, r1, r2, r, E_t, E_nt)
        for i in range(1, n_grid):
            # match numpy.linspace: the last point is exactly x_hi
            x = x_hi if i == n_grid - 1 else i * step
            fx = _objective(x, c0, c1, r0, r1, r2, r, E_t, E_nt)
            if fx < f_best:
                f_best = fx
                i_best = i
        x_best = x_hi if i_best == n_grid - 1 else i_best * step
        lo = (i_best - 1) * step if i_best > 0 else 0.0
        hi = x_hi if i_best + 1 >= n_grid - 1 else (i_best + 1) * step
        a = lo
        b = hi
        tol = rel_tol * x_hi
        c = b - INV_PHI * (b - a)
        d = a + INV_PHI * (b - a)
        fc = _objective(c, c0, c1, r0, r1, r2, r, E_t, E_nt)
        fd = _objective(d, c0, c1, r0, r1, r2, r, E_t, E_nt)
        while (b - a) > tol and it < 500:
            if fc <= fd:
                b = d
                d = c
                fd = fc
                c = b - INV_PHI * (b - a)
                fc = _objective(c, c0, c1, r0, r1, r2, r, E_t, E_nt)
            else:
                a = c
                c = d
                fc = fd
                d = a + INV_PHI * (b - a)
                fd = _objective(d, c0, c1, r0, r1, r2, r, E_t, E_nt)
            it += 1
        if fd < fc:
            c = d
            fc = fd
        if fc < f_best:
            x_best = c
            f_best = fc
    return x_best, f_best


def tally_pulses(const double[:, ::1] u, const double[::1] cdf_n, const double[::1] gamma,
                 const double[:, ::1] cat_cdf, double p_d, attack_Y, attack_e, long long[:, :, ::1] counts):
    cdef Py_ssize_t m = u.shape[0]
    cdef Py_ssize_t n_top = cdf_n.shape[0] - 1
    cdef Py_ssize_t k, n, lo, hi, mid
    cdef int trig, cat, outcome
    cdef bint right, wrong, det, err
    cdef bint attacked = attack_Y is not None
    cdef const double[::1] Y
    cdef const double[::1] e
    if attacked:
        Y = attack_Y
        e = attack_e
    with nogil:
        for k in range(m):
            # first n with u < cdf_n[n]  (numpy.searchsorted side="right")
            lo = 0
            hi = n_top + 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if cdf_n[mid] <= u[k, 0]:
                    lo = mid + 1
                else:
                    hi = mid
            n = lo if lo < n_top else n_top
            trig = 1 if u[k, 1] < gamma[n] else 0
            if attacked:
                det = u[k, 2] < Y[n]
                err = det and (u[k, 3] < e[n])
            else:
                cat = (u[k, 2] >= cat_cdf[n, 0]) + (u[k, 2] >= cat_cdf[n, 1]) + (u[k, 2] >= cat_cdf[n, 2])
                right = cat >= 2 or u[k, 3] < p_d
                wrong = cat == 1 or cat == 3 or u[k, 4] < p_d
                det = right or wrong
                err = wrong and ((not right) or u[k, 5] < 0.5)
            outcome = (1 if det else 0) + (1 if err else 0)
            counts[trig, n, outcome] += 1
