#!/usr/bin/env python3
"""LP backend conforming to the ptxhub external-solver contract.

Usage: lp_backend.py problem.lp out.sol

Reads the restricted LP text format written by the Rust side (Minimize /
Subject To / Bounds / End, named rows, explicit coefficients), solves it
with scipy's dual-simplex HiGHS interface, and writes the solution file:

    status optimal|infeasible|unbounded
    objective <value>
    primal <n>
    <value> ...            one per line, column order of the LP file
    dual <m>
    <value> ...            one per line, row order of the LP file

Row duals are reported as d(objective)/d(rhs) of the row as written, so
the consumer does not need to know how senses were normalized internally.
"""

import sys

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

INF = float("inf")


def tokenize(text):
    for line in text.splitlines():
        line = line.split("\\", 1)[0]
        for tok in line.split():
            yield tok


class Parser:
    def __init__(self, text):
        self.toks = list(tokenize(text))
        self.i = 0
        self.columns = []          # order of first appearance
        self.col_id = {}
        self.obj = {}
        self.rows = []             # (name, terms dict, sense, rhs)
        self.lb = {}
        self.ub = {}

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def col(self, name):
        if name not in self.col_id:
            self.col_id[name] = len(self.columns)
            self.columns.append(name)
        return self.col_id[name]

    @staticmethod
    def is_number(tok):
        try:
            float(tok)
            return True
        except ValueError:
            return tok in ("inf", "-inf")

    @staticmethod
    def num(tok):
        return float(tok)

    def parse(self):
        kw = self.next().lower()
        if kw not in ("minimize", "min"):
            raise ValueError(f"expected Minimize, got {kw}")
        self.parse_objective()
        self.parse_constraints()
        if self.peek() and self.peek().lower() == "bounds":
            self.next()
            self.parse_bounds()
        if self.peek() and self.peek().lower() == "end":
            self.next()

    def linear_terms(self, stop_words):
        """Read `+ c x - c x ...` until a stop word or a sense token."""
        terms = {}
        sign = 1.0
        while True:
            tok = self.peek()
            if tok is None or tok.lower() in stop_words or tok in ("<=", ">=", "="):
                return terms
            self.next()
            if tok == "+":
                sign = 1.0
                continue
            if tok == "-":
                sign = -1.0
                continue
            if self.is_number(tok):
                coeff = sign * self.num(tok)
                name = self.next()
                j = self.col(name)
                terms[j] = terms.get(j, 0.0) + coeff
            else:
                # bare column name, implicit coefficient 1
                j = self.col(tok)
                terms[j] = terms.get(j, 0.0) + sign
            sign = 1.0

    def parse_objective(self):
        label = self.peek()
        if label and label.endswith(":"):
            self.next()
        self.obj = self.linear_terms({"subject", "st", "s.t."})

    def parse_constraints(self):
        kw = self.next().lower()
        if kw == "subject":
            to = self.next().lower()
            if to != "to":
                raise ValueError("expected 'Subject To'")
        elif kw not in ("st", "s.t."):
            raise ValueError(f"expected Subject To, got {kw}")
        while True:
            tok = self.peek()
            if tok is None or tok.lower() in ("bounds", "end"):
                return
            name = self.next()
            if not name.endswith(":"):
                raise ValueError(f"constraint name missing ':': {name}")
            terms = self.linear_terms({"bounds", "end"})
            sense = self.next()
            if sense not in ("<=", ">=", "="):
                raise ValueError(f"bad sense {sense!r} in row {name}")
            rhs = self.num(self.next())
            self.rows.append((name[:-1], terms, sense, rhs))

    def parse_bounds(self):
        while True:
            tok = self.peek()
            if tok is None or tok.lower() == "end":
                return
            first = self.next()
            if self.is_number(first):
                # lb <= x <= ub
                lo = self.num(first)
                assert self.next() == "<="
                name = self.next()
                assert self.next() == "<="
                hi = self.num(self.next())
                j = self.col(name)
                self.lb[j] = lo
                self.ub[j] = hi
            else:
                j = self.col(first)
                nxt = self.next()
                if nxt == "free":
                    self.lb[j] = -INF
                    self.ub[j] = INF
                elif nxt == "=":
                    v = self.num(self.next())
                    self.lb[j] = v
                    self.ub[j] = v
                elif nxt == ">=":
                    self.lb[j] = self.num(self.next())
                elif nxt == "<=":
                    self.ub[j] = self.num(self.next())
                else:
                    raise ValueError(f"bad bound line near {first} {nxt}")


def main():
    if len(sys.argv) != 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(sys.argv[1]) as fh:
        p = Parser(fh.read())
    p.parse()

    n = len(p.columns)
    c = np.zeros(n)
    for j, v in p.obj.items():
        c[j] = v

    bounds = [(p.lb.get(j, 0.0), p.ub.get(j, INF)) for j in range(n)]

    eq_rows, eq_rhs, ub_rows, ub_rhs = [], [], [], []
    kinds = []  # per original row: ("eq"|"ub", position, flip)
    for name, terms, sense, rhs in p.rows:
        items = sorted(terms.items())
        idx = [j for j, _ in items]
        val = [v for _, v in items]
        if sense == "=":
            kinds.append(("eq", len(eq_rows), 1.0))
            eq_rows.append((idx, val))
            eq_rhs.append(rhs)
        elif sense == "<=":
            kinds.append(("ub", len(ub_rows), 1.0))
            ub_rows.append((idx, val))
            ub_rhs.append(rhs)
        else:  # >=  →  negate into <=
            kinds.append(("ub", len(ub_rows), -1.0))
            ub_rows.append((idx, [-v for v in val]))
            ub_rhs.append(-rhs)

    def build(rows):
        data, ri, ci = [], [], []
        for i, (idx, val) in enumerate(rows):
            for j, v in zip(idx, val):
                if v != 0.0:
                    ri.append(i)
                    ci.append(j)
                    data.append(v)
        return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    A_eq = build(eq_rows) if eq_rows else None
    A_ub = build(ub_rows) if ub_rows else None

    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.array(ub_rhs) if ub_rows else None,
        A_eq=A_eq,
        b_eq=np.array(eq_rhs) if eq_rows else None,
        bounds=bounds,
        method="highs-ds",
        options={
            "primal_feasibility_tolerance": 1e-9,
            "dual_feasibility_tolerance": 1e-9,
        },
    )

    status = {0: "optimal", 2: "infeasible", 3: "unbounded"}.get(res.status)
    if status is None:
        print(f"solver failure: {res.message}", file=sys.stderr)
        return 1

    with open(sys.argv[2], "w") as out:
        out.write(f"status {status}\n")
        if status != "optimal":
            out.write("objective 0\nprimal 0\ndual 0\n")
            return 0
        out.write(f"objective {float(res.fun)!r}\n")
        out.write(f"primal {n}\n")
        for v in res.x:
            out.write(f"{float(v)!r}\n")
        # duals back in original row order, as d(obj)/d(rhs-as-written)
        out.write(f"dual {len(p.rows)}\n")
        eq_marg = res.eqlin.marginals if eq_rows else []
        ub_marg = res.ineqlin.marginals if ub_rows else []
        for kind, pos, flip in kinds:
            m = eq_marg[pos] if kind == "eq" else ub_marg[pos]
            out.write(f"{float(flip * m)!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
