"""Reference implementations written independently of the package.

They share no code with ``mvr``: each one recomputes an expected value from
first principles so tests do not compare the package against itself.
"""

from functools import lru_cache

# exec below proof below spec, as ranks
MODE_RANK = {"exec": 0, "proof": 1, "spec": 2}


def mode_leq(a: str, b: str) -> bool:
    return MODE_RANK[a] <= MODE_RANK[b]


def mode_join(a: str, b: str) -> str:
    return a if MODE_RANK[a] >= MODE_RANK[b] else b


@lru_cache(maxsize=None)
def fibo(n: int) -> int:
    return n if n < 2 else fibo(n - 2) + fibo(n - 1)


def fibo_fits(bits: int) -> list:
    """Every n whose Fibonacci number is below 2**bits, by direct recursion."""
    out, n = [], 0
    while fibo(n) < 2 ** bits:
        out.append(n)
        n += 1
    return out


def big_step(expr):
    """Evaluate the pure arithmetic fragment of the calculus, given as nested
    tuples: ("int", k), ("add", a, b), ("let", x, bound, body), ("var", x),
    ("seq", unit_expr, e), ("unit",), ("some", e), ("none",),
    ("iflet", x, scrutinee, then, orelse).

    Returns an int, None (unit) or ("some", v) / ("none",).
    """

    def ev(e, env):
        tag = e[0]
        if tag == "int":
            return e[1]
        if tag == "unit":
            return None
        if tag == "var":
            return env[e[1]]
        if tag == "add":
            return ev(e[1], env) + ev(e[2], env)
        if tag == "let":
            return ev(e[3], {**env, e[1]: ev(e[2], env)})
        if tag == "seq":
            ev(e[1], env)
            return ev(e[2], env)
        if tag == "some":
            return ("some", ev(e[1], env))
        if tag == "none":
            return ("none",)
        if tag == "iflet":
            s = ev(e[2], env)
            if s[0] == "some":
                return ev(e[3], {**env, e[1]: s[1]})
            return ev(e[4], env)
        raise ValueError(tag)

    return ev(expr, {})


def to_sexpr(expr) -> str:
    """Render the tuple form above in the calculus concrete syntax."""
    tag = expr[0]
    if tag == "int":
        return str(expr[1])
    if tag == "unit":
        return "()"
    if tag == "var":
        return expr[1]
    if tag == "add":
        return f"(+ {to_sexpr(expr[1])} {to_sexpr(expr[2])})"
    if tag == "let":
        return f"(let spec {expr[1]} {to_sexpr(expr[2])} {to_sexpr(expr[3])})"
    if tag == "seq":
        return f"(seq {to_sexpr(expr[1])} {to_sexpr(expr[2])})"
    if tag == "some":
        return f"(Some {to_sexpr(expr[1])} int)"
    if tag == "none":
        return "(None int)"
    if tag == "iflet":
        return f"(iflet {expr[1]} {to_sexpr(expr[2])} {to_sexpr(expr[3])} {to_sexpr(expr[4])})"
    raise ValueError(tag)


# Exec programs of the erasure corpus, re-derived by hand from their intent.
def sum_to(n):
    return n * (n + 1) // 2


def gcd(a, b):
    while b:
        a, b = b, a % b
    return a


def popcount(n):
    return bin(n).count("1")


def isqrt(n):
    r = 0
    while (r + 1) * (r + 1) <= n:
        r += 1
    return r


def digit_sum(n):
    return sum(int(c) for c in str(n))
