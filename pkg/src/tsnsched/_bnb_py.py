"""Pure-Python branch-and-bound kernel (fallback for the compiled ``_bnb``).

Problem encoding (shared with the Cython kernel):

* binaries ``0..n_bin-1``; integer variables become difference-graph nodes
  ``1..n_int`` with node 0 pinned to value 0;
* every row reads ``sum(c_b * b) + k * (x_a - x_b) <= rhs`` with ``k > 0``;
  ``a``/``b`` are node indices, ``a == -1`` when the row has no integer part;
* ``D[i][j]`` holds the largest feasible ``x_j - x_i`` (shortest path i -> j).

Returns ``(status, best_obj, best_bin, best_x, nodes)`` with status 0 for a
proven optimum, 1 for proven infeasibility and 2 when the node cap was hit.
"""

INF = 1 << 62


class _Search:
    def __init__(self, n_bin, n_int, lb, ub, row_ptr, row_bvar, row_bcoef,
                 row_a, row_b, row_k, row_rhs, obj, order, first, max_nodes):
        self.n_bin = n_bin
        self.n = n_int + 1
        self.row_ptr = row_ptr
        self.row_bvar = row_bvar
        self.row_bcoef = row_bcoef
        self.row_a = row_a
        self.row_b = row_b
        self.row_k = row_k
        self.row_rhs = row_rhs
        self.n_rows = len(row_rhs)
        self.obj = obj
        self.order = order
        self.first = first
        self.max_nodes = max_nodes
        self.val = [-1] * n_bin
        self.active = [0] * self.n_rows
        self.trail = []
        self.row_trail = []
        self.nodes = 0
        self.aborted = False
        self.found = False
        self.best_obj = 0
        self.best_bin = None
        self.best_x = None
        n = self.n
        self.D = [[INF] * n for _ in range(n)]
        for i in range(n):
            self.D[i][i] = 0
        self.ok = True
        for i in range(n_int):
            if ub[i] < INF and not self.add_edge(0, i + 1, ub[i]):
                self.ok = False
            if not self.add_edge(i + 1, 0, -lb[i]):
                self.ok = False

    def add_edge(self, u, v, w):
        # x_v - x_u <= w
        D = self.D
        if D[u][v] <= w:
            return True
        if D[v][u] < INF and D[v][u] + w < 0:
            return False
        n = self.n
        Dv = D[v]
        for i in range(n):
            diu = D[i][u]
            if diu >= INF:
                continue
            base = diu + w
            Di = D[i]
            for j in range(n):
                dvj = Dv[j]
                if dvj >= INF:
                    continue
                c = base + dvj
                if c < Di[j]:
                    Di[j] = c
        return True

    def assign(self, var, value):
        self.val[var] = value
        self.trail.append(var)

    def propagate(self):
        val = self.val
        D = self.D
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
                    x = val[v]
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
                        k = self.row_k[r]
                        if not self.add_edge(self.row_b[r], a, (rhs - fs) // k):
                            return False
                    self.active[r] = 1
                    self.row_trail.append(r)
                    changed = True
                    continue
                if a < 0:
                    intmin = 0
                else:
                    d = D[a][self.row_b[r]]
                    if d >= INF:
                        continue
                    intmin = -self.row_k[r] * d
                lo = fs + minsum + intmin
                if lo > rhs:
                    return False
                for t in range(self.row_ptr[r], self.row_ptr[r + 1]):
                    v = self.row_bvar[t]
                    if val[v] >= 0:
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

    def bound(self):
        total = 0
        for v in range(self.n_bin):
            c = self.obj[v]
            if c == 0:
                continue
            x = self.val[v]
            if x >= 0:
                total += c * x
            elif c > 0:
                total += c
        return total

    def dfs(self):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            self.aborted = True
            return
        if self.found and self.bound() <= self.best_obj:
            return
        var = -1
        for v in self.order:
            if self.val[v] < 0:
                var = v
                break
        if var < 0:
            obj = self.bound()
            if not self.found or obj > self.best_obj:
                self.found = True
                self.best_obj = obj
                self.best_bin = list(self.val)
                self.best_x = [-self.D[i][0] for i in range(1, self.n)]
            return
        first = self.first[var]
        for value in (first, 1 - first):
            saved = [row[:] for row in self.D]
            mark = len(self.trail)
            rmark = len(self.row_trail)
            self.assign(var, value)
            if self.propagate():
                self.dfs()
            self.D = saved
            while len(self.trail) > mark:
                self.val[self.trail.pop()] = -1
            while len(self.row_trail) > rmark:
                self.active[self.row_trail.pop()] = 0
            if self.aborted:
                return


def search(n_bin, n_int, lb, ub, row_ptr, row_bvar, row_bcoef, row_a, row_b,
           row_k, row_rhs, obj, order, first, max_nodes):
    s = _Search(n_bin, n_int, list(lb), list(ub), list(row_ptr), list(row_bvar),
                list(row_bcoef), list(row_a), list(row_b), list(row_k),
                list(row_rhs), list(obj), list(order), list(first), max_nodes)
    if s.ok and s.propagate():
        s.dfs()
    if s.aborted:
        status = 2
    elif s.found:
        status = 0
    else:
        status = 1
    return status, s.best_obj, s.best_bin, s.best_x, s.nodes
