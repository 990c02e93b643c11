# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled branch-and-bound kernel; same encoding and result as ``_bnb_py``."""

import numpy as np
from libc.stdint cimport int64_t
from libc.string cimport memcpy

cdef int64_t INF = (<int64_t>1) << 62


cdef inline int64_t floordiv(int64_t a, int64_t b):
    # b > 0
    cdef int64_t q = a / b
    if (a % b != 0) and (a < 0):
        q -= 1
    return q


cdef class _Search:
    cdef int n_bin, n, n_rows, n_order
    cdef long max_nodes, nodes
    cdef bint aborted, found
    cdef int64_t best_obj
    cdef int64_t[::1] row_ptr, row_bvar, row_bcoef, row_a, row_b, row_k, row_rhs, obj
    cdef int64_t[::1] order, first
    cdef signed char[::1] val, active
    cdef int[::1] trail, row_trail
    cdef int trail_len, row_trail_len
    cdef int64_t[:, ::1] D
    cdef list saved
    cdef object best_bin, best_x

    def __init__(self, int n_bin, int n_int, lb, ub, row_ptr, row_bvar, row_bcoef,
                 row_a, row_b, row_k, row_rhs, obj, order, first, long max_nodes):
        self.n_bin = n_bin
        self.n = n_int + 1
        self.row_ptr = np.ascontiguousarray(row_ptr, dtype=np.int64)
        self.row_bvar = np.ascontiguousarray(row_bvar, dtype=np.int64)
        self.row_bcoef = np.ascontiguousarray(row_bcoef, dtype=np.int64)
        self.row_a = np.ascontiguousarray(row_a, dtype=np.int64)
        self.row_b = np.ascontiguousarray(row_b, dtype=np.int64)
        self.row_k = np.ascontiguousarray(row_k, dtype=np.int64)
        self.row_rhs = np.ascontiguousarray(row_rhs, dtype=np.int64)
        self.n_rows = len(row_rhs)
        self.obj = np.ascontiguousarray(obj, dtype=np.int64)
        self.order = np.ascontiguousarray(order, dtype=np.int64)
        self.n_order = len(order)
        self.first = np.ascontiguousarray(first, dtype=np.int64)
        self.max_nodes = max_nodes
        self.nodes = 0
        self.aborted = False
        self.found = False
        self.best_obj = 0
        self.val = np.full(max(n_bin, 1), -1, dtype=np.int8)
        self.active = np.zeros(max(self.n_rows, 1), dtype=np.int8)
        self.trail = np.zeros(max(n_bin, 1), dtype=np.intc)
        self.row_trail = np.zeros(max(self.n_rows, 1), dtype=np.intc)
        self.trail_len = 0
        self.row_trail_len = 0
        self.saved = []
        self.best_bin = None
        self.best_x = None
        D = np.full((self.n, self.n), INF, dtype=np.int64)
        np.fill_diagonal(D, 0)
        self.D = D

    def init_bounds(self, lb, ub):
        cdef int i
        for i in range(self.n - 1):
            if ub[i] < INF and not self.add_edge(0, i + 1, ub[i]):
                return False
            if not self.add_edge(i + 1, 0, -lb[i]):
                return False
        return True

    cdef bint add_edge(self, int u, int v, int64_t w):
        cdef int64_t[:, ::1] D = self.D
        cdef int n = self.n
        cdef int i, j
        cdef int64_t diu, base, dvj, c
        if D[u, v] <= w:
            return True
        if D[v, u] < INF and D[v, u] + w < 0:
            return False
        for i in range(n):
            diu = D[i, u]
            if diu >= INF:
                continue
            base = diu + w
            for j in range(n):
                dvj = D[v, j]
                if dvj >= INF:
                    continue
                c = base + dvj
                if c < D[i, j]:
                    D[i, j] = c
        return True

    cdef inline void assign(self, int var, int value):
        self.val[var] = value
        self.trail[self.trail_len] = var
        self.trail_len += 1

    cdef bint propagate(self):
        cdef int r, t, v, a, nfree
        cdef int64_t fs, minsum, c, rhs, d, intmin, lo, x
        cdef bint changed
        while True:
            changed = False
            for r in range(self.n_rows):
                if self.active[r]:
                    continue
                fs = 0
                minsum = 0
                nfree = 0
                for t in range(self.row_ptr[r], self.row_ptr[r + 1]):
                    v = self.row_bvar[t]
                    c = self.row_bcoef[t]
                    x = self.val[v]
                    if x >= 0:
                        fs += c * x
                    else:
                        nfree += 1
                        if c < 0:
                            minsum += c
                a = self.row_a[r]
                rhs = self.row_rhs[r]
                if nfree == 0:
                    if a < 0:
                        if fs > rhs:
                            return False
                    else:
                        if not self.add_edge(self.row_b[r], a, floordiv(rhs - fs, self.row_k[r])):
                            return False
                    self.active[r] = 1
                    self.row_trail[self.row_trail_len] = r
                    self.row_trail_len += 1
                    changed = True
                    continue
                if a < 0:
                    intmin = 0
                else:
                    d = self.D[a, self.row_b[r]]
                    if d >= INF:
                        continue
                    intmin = -self.row_k[r] * d
                lo = fs + minsum + intmin
                if lo > rhs:
                    return False
                for t in range(self.row_ptr[r], self.row_ptr[r + 1]):
                    v = self.row_bvar[t]
                    if self.val[v] >= 0:
                        continue
                    c = self.row_bcoef[t]
                    if c > 0 and lo + c > rhs:
                        self.assign(v, 0)
                        changed = True
                    elif c < 0 and lo - c > rhs:
                        self.assign(v, 1)
                        changed = True
            if not changed:
                return True

    cdef int64_t bound(self):
        cdef int64_t total = 0
        cdef int v
        cdef int64_t c
        for v in range(self.n_bin):
            c = self.obj[v]
            if c == 0:
                continue
            if self.val[v] >= 0:
                total += c * self.val[v]
            elif c > 0:
                total += c
        return total

    cdef void dfs(self, int depth):
        cdef int var = -1
        cdef int i, k, value, first, mark, rmark
        cdef int64_t obj
        cdef int64_t[:, ::1] snap
        self.nodes += 1
        if self.nodes > self.max_nodes:
            self.aborted = True
            return
        if self.found and self.bound() <= self.best_obj:
            return
        for k in range(self.n_order):
            if self.val[self.order[k]] < 0:
                var = self.order[k]
                break
        if var < 0:
            obj = self.bound()
            if not self.found or obj > self.best_obj:
                self.found = True
                self.best_obj = obj
                self.best_bin = [int(self.val[i]) for i in range(self.n_bin)]
                self.best_x = [-self.D[i, 0] for i in range(1, self.n)]
            return
        if depth >= len(self.saved):
            self.saved.append(np.empty((self.n, self.n), dtype=np.int64))
        snap = self.saved[depth]
        first = self.first[var]
        for value in (first, 1 - first):
            memcpy(&snap[0, 0], &self.D[0, 0], self.n * self.n * sizeof(int64_t))
            mark = self.trail_len
            rmark = self.row_trail_len
            self.assign(var, value)
            if self.propagate():
                self.dfs(depth + 1)
            memcpy(&self.D[0, 0], &snap[0, 0], self.n * self.n * sizeof(int64_t))
            while self.trail_len > mark:
                self.trail_len -= 1
                self.val[self.trail[self.trail_len]] = -1
            while self.row_trail_len > rmark:
                self.row_trail_len -= 1
                self.active[self.row_trail[self.row_trail_len]] = 0
            if self.aborted:
                return

    def run(self, lb, ub):
        if self.init_bounds(lb, ub) and self.propagate():
            self.dfs(0)
        if self.aborted:
            status = 2
        elif self.found:
            status = 0
        else:
            status = 1
        return status, int(self.best_obj), self.best_bin, self.best_x, int(self.nodes)


def search(n_bin, n_int, lb, ub, row_ptr, row_bvar, row_bcoef, row_a, row_b,
           row_k, row_rhs, obj, order, first, max_nodes):
    s = _Search(n_bin, n_int, lb, ub, row_ptr, row_bvar, row_bcoef, row_a, row_b,
                row_k, row_rhs, obj, order, first, max_nodes)
    return s.run(list(lb), list(ub))
