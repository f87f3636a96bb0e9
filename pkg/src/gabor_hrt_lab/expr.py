"""Symbolic generator expressions: parse, evaluate, differentiate, classify.

The grammar covers the generator family the rest of the toolkit understands:
field operations, exp and log, rational powers, n-th roots, ``abs``, and
sin/cos atoms.  Trees are immutable; every operation here is a pure function.

Grammar (whitespace-insensitive, implicit multiplication rejected)::

    expr     := term (('+'|'-') term)*
    term     := factor (('*'|'/') factor)*
    factor   := base ('^' rational)?
    base     := NUMBER | 'x' | 'pi' | '(' expr ')' | FUNC '(' expr ')' | '-' factor
    FUNC     := exp | log | sqrt | root<N> | abs | sin | cos      (N integer >= 2)
    rational := ['-'] INT ['/' INT] | '(' ['-'] INT ['/' INT] ')'

Precedence is ``^`` > unary ``-`` > ``*``/``/`` > ``+``/``-``, so ``-x^2``
parses as ``-(x^2)``.  Exponents are exact rationals; ``x^0.5`` is a syntax
error (write ``x^(1/2)`` or ``sqrt(x)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

__all__ = [
    "Expr",
    "ExprSyntaxError",
    "TailConfig",
    "TriState",
    "DecayClass",
    "ClassReport",
    "parse",
    "to_source",
    "evaluate",
    "evaluate_array",
    "evaluate_log_array",
    "evaluate_mp",
    "differentiate",
    "substitute_x",
    "reflect",
    "classify",
]

_ATOMS = frozenset({"const", "x", "pi"})
_UNARY = frozenset({"neg", "exp", "log", "abs", "sin", "cos"})
_BINARY = frozenset({"add", "sub", "mul", "div"})
_FUNCS = {"exp", "log", "sqrt", "abs", "sin", "cos"}


class ExprSyntaxError(ValueError):
    """Raised on malformed source, with the 0-based offset of the problem."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


@dataclass(frozen=True)
class Expr:
    """One node of an expression tree.

    ``value`` is meaningful for ``const``, ``exponent`` for ``pow`` and
    ``degree`` for ``root``; they are left at their defaults elsewhere.
    """

    kind: str
    children: tuple["Expr", ...] = ()
    value: float = 0.0
    exponent: Fraction | None = None
    degree: int = 0

    def __str__(self):
        return to_source(self)


# ---------------------------------------------------------------------------
# constructors (fold the cheap identities so derivative trees stay readable)

X = Expr("x")
PI = Expr("pi")


def const(v):
    return Expr("const", value=float(v))


ZERO = const(0.0)
ONE = const(1.0)


def _is_const(e, v=None):
    return e.kind == "const" and (v is None or e.value == v)


def neg(e):
    if _is_const(e):
        return const(-e.value)
    return Expr("neg", (e,))


def add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    return Expr("add", (a, b))


def sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    return Expr("sub", (a, b))


def mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    return Expr("mul", (a, b))


def div(a, b):
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    if _is_const(b, 0.0):
        raise ValueError("literal zero denominator")
    return Expr("div", (a, b))


def exp_of(e):
    return Expr("exp", (e,))


def log_of(e):
    return Expr("log", (e,))


def abs_of(e):
    return Expr("abs", (e,))


def sin_of(e):
    return Expr("sin", (e,))


def cos_of(e):
    return Expr("cos", (e,))


def pow_rational(base, exponent):
    exponent = Fraction(exponent)
    if exponent == 1:
        return base
    if exponent == 0:
        return ONE
    return Expr("pow", (base,), exponent=exponent)


def root_of(base, n):
    n = int(n)
    if n < 2:
        raise ValueError("root degree must be an integer >= 2")
    return Expr("root", (base,), degree=n)


# ---------------------------------------------------------------------------
# parser

_NUMBER_START = frozenset("0123456789.")


class _Tokenizer:
    def __init__(self, source):
        self.source = source
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.source) and self.source[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self._skip_ws()
        if self.pos >= len(self.source):
            return ("end", "", self.pos)
        c = self.source[self.pos]
        if c in "+-*/^()":
            return (c, c, self.pos)
        if c in _NUMBER_START:
            return self._number()
        if c.isalpha():
            return self._ident()
        raise ExprSyntaxError(f"unexpected character {c!r}", self.pos)

    def _number(self):
        start = self.pos
        s = self.source
        i = start
        while i < len(s) and s[i].isdigit():
            i += 1
        if i < len(s) and s[i] == ".":
            i += 1
            while i < len(s) and s[i].isdigit():
                i += 1
        if i < len(s) and s[i] in "eE":
            j = i + 1
            if j < len(s) and s[j] in "+-":
                j += 1
            if j < len(s) and s[j].isdigit():
                i = j
                while i < len(s) and s[i].isdigit():
                    i += 1
        text = s[start:i]
        if text == ".":
            raise ExprSyntaxError("malformed number", start)
        return ("number", text, start)

    def _ident(self):
        start = self.pos
        s = self.source
        i = start
        while i < len(s) and (s[i].isalpha() or s[i].isdigit()):
            i += 1
        return ("ident", s[start:i], start)

    def take(self):
        tok = self.peek()
        self.pos = tok[2] + len(tok[1])
        return tok


class _Parser:
    def __init__(self, source):
        if not source or not source.strip():
            raise ExprSyntaxError("empty expression", 0)
        self.toks = _Tokenizer(source)

    def parse(self):
        e = self._expr()
        kind, text, pos = self.toks.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", pos)
        return e

    def _expr(self):
        e = self._term()
        while True:
            kind, _, _ = self.toks.peek()
            if kind == "+":
                self.toks.take()
                e = Expr("add", (e, self._term()))
            elif kind == "-":
                self.toks.take()
                e = Expr("sub", (e, self._term()))
            else:
                return e

    def _term(self):
        e = self._factor()
        while True:
            kind, _, pos = self.toks.peek()
            if kind == "*":
                self.toks.take()
                e = Expr("mul", (e, self._factor()))
            elif kind == "/":
                self.toks.take()
                rhs = self._factor()
                if _is_const(rhs, 0.0):
                    raise ExprSyntaxError("division by literal zero", pos)
                e = Expr("div", (e, rhs))
            elif kind in ("number", "ident", "("):
                # "2x" and friends: implicit multiplication is not part of
                # the grammar, reject instead of guessing.
                raise ExprSyntaxError("implicit multiplication rejected", pos)
            else:
                return e

    def _factor(self):
        base = self._base()
        kind, _, _ = self.toks.peek()
        if kind == "^":
            self.toks.take()
            return Expr("pow", (base,), exponent=self._rational())
        return base

    def _rational(self):
        kind, text, pos = self.toks.peek()
        parens = kind == "("
        if parens:
            self.toks.take()
            kind, text, pos = self.toks.peek()
        sign = 1
        if kind == "-":
            self.toks.take()
            sign = -1
            kind, text, pos = self.toks.peek()
        if kind != "number" or any(c in text for c in ".eE"):
            raise ExprSyntaxError("exponent must be an integer or p/q rational", pos)
        self.toks.take()
        num = int(text)
        den = 1
        # p/q exponents must be parenthesized; a bare '/' after x^p is the
        # ordinary division operator
        if parens and self.toks.peek()[0] == "/":
            self.toks.take()
            kind, text, pos = self.toks.peek()
            if kind != "number" or any(c in text for c in ".eE"):
                raise ExprSyntaxError("exponent denominator must be an integer", pos)
            self.toks.take()
            den = int(text)
            if den == 0:
                raise ExprSyntaxError("zero exponent denominator", pos)
        if parens:
            kind, text, pos = self.toks.peek()
            if kind != ")":
                raise ExprSyntaxError("expected ')' after exponent", pos)
            self.toks.take()
        return Fraction(sign * num, den)

    def _base(self):
        kind, text, pos = self.toks.take()
        if kind == "number":
            return const(float(text))
        if kind == "-":
            inner = self._factor()
            if _is_const(inner):
                return const(-inner.value)
            return Expr("neg", (inner,))
        if kind == "(":
            e = self._expr()
            k2, t2, p2 = self.toks.take()
            if k2 != ")":
                raise ExprSyntaxError("expected ')'", p2)
            return e
        if kind == "ident":
            if text == "x":
                return X
            if text == "pi":
                return PI
            return self._call(text, pos)
        raise ExprSyntaxError(f"unexpected {text!r}", pos)

    def _call(self, name, pos):
        if name in _FUNCS:
            func = name
            degree = 2 if name == "sqrt" else 0
        elif name.startswith("root") and name[4:].isdigit():
            func = "root"
            degree = int(name[4:])
            if degree < 2:
                raise ExprSyntaxError("root degree must be >= 2", pos)
        else:
            raise ExprSyntaxError(f"unknown identifier {name!r}", pos)
        kind, _, p2 = self.toks.take()
        if kind != "(":
            raise ExprSyntaxError(f"expected '(' after {name}", p2)
        arg = self._expr()
        kind, _, p3 = self.toks.take()
        if kind != ")":
            raise ExprSyntaxError("expected ')'", p3)
        if func == "root" or name == "sqrt":
            return Expr("root", (arg,), degree=degree)
        return Expr(func, (arg,))


def parse(source):
    """Parse ``source`` into an :class:`Expr`; raise :class:`ExprSyntaxError`."""
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# printing (print-then-parse returns a structurally identical tree)

_LEVEL_ADD, _LEVEL_MUL, _LEVEL_NEG, _LEVEL_POW, _LEVEL_ATOM = 1, 2, 3, 4, 5


def _level(e):
    if e.kind in ("add", "sub"):
        return _LEVEL_ADD
    if e.kind in ("mul", "div"):
        return _LEVEL_MUL
    if e.kind == "neg":
        return _LEVEL_NEG
    if e.kind == "pow":
        return _LEVEL_POW
    return _LEVEL_ATOM


def _fmt_const(v):
    if v == int(v) and abs(v) < 1e16:
        return str(int(v)) if v >= 0 else f"({int(v)})"
    return repr(v) if v >= 0 else f"({v!r})"


def _fmt_exponent(r):
    if r.denominator == 1 and r >= 0:
        return str(r.numerator)
    if r.denominator == 1:
        return f"({r.numerator})"
    return f"({r.numerator}/{r.denominator})"


def _wrap(e, min_level):
    s = to_source(e)
    return f"({s})" if _level(e) < min_level else s


def to_source(e):
    """Render a tree back to grammar text."""
    k = e.kind
    if k == "const":
        # negative literals print parenthesized so the parser's constant
        # folding reproduces the same node
        v = e.value
        if v < 0:
            return f"(-{_fmt_const(-v)})"
        return _fmt_const(v)
    if k == "x":
        return "x"
    if k == "pi":
        return "pi"
    if k == "neg":
        return "-" + _wrap(e.children[0], _LEVEL_POW)
    if k == "add":
        return _wrap(e.children[0], _LEVEL_ADD) + "+" + _wrap(e.children[1], _LEVEL_ADD + 1)
    if k == "sub":
        return _wrap(e.children[0], _LEVEL_ADD) + "-" + _wrap(e.children[1], _LEVEL_ADD + 1)
    if k == "mul":
        return _wrap(e.children[0], _LEVEL_MUL) + "*" + _wrap(e.children[1], _LEVEL_MUL + 1)
    if k == "div":
        return _wrap(e.children[0], _LEVEL_MUL) + "/" + _wrap(e.children[1], _LEVEL_MUL + 1)
    if k == "pow":
        return _wrap(e.children[0], _LEVEL_ATOM) + "^" + _fmt_exponent(e.exponent)
    if k == "root":
        inner = to_source(e.children[0])
        return f"sqrt({inner})" if e.degree == 2 else f"root{e.degree}({inner})"
    if k in _UNARY:
        return f"{k}({to_source(e.children[0])})"
    raise ValueError(f"unknown node kind {k!r}")


# ---------------------------------------------------------------------------
# evaluation

def _pow_rational_scalar(v, r):
    p, q = r.numerator, r.denominator
    if v > 0:
        try:
            return math.exp(float(r) * math.log(v))
        except OverflowError:
            return math.inf
    if v == 0:
        if r > 0:
            return 0.0
        if r == 0:
            return 1.0
        return None
    if q % 2 == 0:
        return None
    sign = -1.0 if p % 2 else 1.0
    try:
        return sign * math.exp(float(r) * math.log(-v))
    except OverflowError:
        return sign * math.inf


def evaluate(e, x):
    """Evaluate at a real point.

    Returns a float, or ``None`` when a sub-expression leaves its real
    domain (log of a non-positive value, division by zero, even root of a
    negative value).  Overflow saturates to ``inf`` rather than failing.
    """
    k = e.kind
    if k == "const":
        return e.value
    if k == "x":
        return float(x)
    if k == "pi":
        return math.pi
    a = evaluate(e.children[0], x)
    if a is None:
        return None
    if k == "neg":
        return -a
    if k == "exp":
        try:
            return math.exp(a)
        except OverflowError:
            return math.inf
    if k == "log":
        if a <= 0 or math.isnan(a):
            return None
        return math.log(a)
    if k == "abs":
        return abs(a)
    if k == "sin":
        return math.sin(a) if math.isfinite(a) else None
    if k == "cos":
        return math.cos(a) if math.isfinite(a) else None
    if k == "pow":
        if math.isnan(a):
            return None
        return _pow_rational_scalar(a, e.exponent)
    if k == "root":
        if math.isnan(a):
            return None
        return _pow_rational_scalar(a, Fraction(1, e.degree))
    b = evaluate(e.children[1], x)
    if b is None:
        return None
    if k == "add":
        return a + b
    if k == "sub":
        return a - b
    if k == "mul":
        return a * b
    if k == "div":
        if b == 0:
            return None
        return a / b
    raise ValueError(f"unknown node kind {k!r}")


def evaluate_array(e, xs):
    """Vectorized :func:`evaluate`; undefined points come back as NaN."""
    xs = np.asarray(xs, dtype=float)
    with np.errstate(all="ignore"):
        return _eval_arr(e, xs)


def _eval_arr(e, xs):
    k = e.kind
    if k == "const":
        return np.full_like(xs, e.value)
    if k == "x":
        return xs.copy()
    if k == "pi":
        return np.full_like(xs, math.pi)
    a = _eval_arr(e.children[0], xs)
    if k == "neg":
        return -a
    if k == "exp":
        return np.exp(a)
    if k == "log":
        out = np.where(a > 0, np.log(np.where(a > 0, a, 1.0)), np.nan)
        return out
    if k == "abs":
        return np.abs(a)
    if k == "sin":
        return np.where(np.isfinite(a), np.sin(np.where(np.isfinite(a), a, 0.0)), np.nan)
    if k == "cos":
        return np.where(np.isfinite(a), np.cos(np.where(np.isfinite(a), a, 0.0)), np.nan)
    if k in ("pow", "root"):
        r = e.exponent if k == "pow" else Fraction(1, e.degree)
        return _pow_rational_array(a, r)
    b = _eval_arr(e.children[1], xs)
    if k == "add":
        return a + b
    if k == "sub":
        return a - b
    if k == "mul":
        return a * b
    if k == "div":
        return np.where(b != 0, a / np.where(b != 0, b, 1.0), np.nan)
    raise ValueError(f"unknown node kind {k!r}")


def _pow_rational_array(a, r):
    p, q = r.numerator, r.denominator
    out = np.full_like(a, np.nan)
    pos = a > 0
    out[pos] = np.power(a[pos], float(r))
    zero = a == 0
    out[zero] = 0.0 if r > 0 else (1.0 if r == 0 else np.nan)
    negmask = a < 0
    if q % 2 == 1:
        sign = -1.0 if p % 2 else 1.0
        out[negmask] = sign * np.power(-a[negmask], float(r))
    return out


def evaluate_mp(e, x, dps=30):
    """High-precision scalar evaluation via mpmath; ``None`` when undefined."""
    with mpmath.workdps(dps):
        return _eval_mp(e, mpmath.mpf(x))


def _eval_mp(e, x):
    k = e.kind
    if k == "const":
        return mpmath.mpf(e.value)
    if k == "x":
        return x
    if k == "pi":
        return +mpmath.pi
    a = _eval_mp(e.children[0], x)
    if a is None:
        return None
    if k == "neg":
        return -a
    if k == "exp":
        return mpmath.exp(a)
    if k == "log":
        if a <= 0:
            return None
        return mpmath.log(a)
    if k == "abs":
        return abs(a)
    if k == "sin":
        return mpmath.sin(a)
    if k == "cos":
        return mpmath.cos(a)
    if k in ("pow", "root"):
        r = e.exponent if k == "pow" else Fraction(1, e.degree)
        if a > 0:
            return mpmath.exp(mpmath.mpf(r.numerator) / r.denominator * mpmath.log(a))
        if a == 0:
            return mpmath.mpf(0) if r > 0 else (mpmath.mpf(1) if r == 0 else None)
        if r.denominator % 2 == 0:
            return None
        sign = -1 if r.numerator % 2 else 1
        return sign * mpmath.exp(mpmath.mpf(r.numerator) / r.denominator * mpmath.log(-a))
    b = _eval_mp(e.children[1], x)
    if b is None:
        return None
    if k == "add":
        return a + b
    if k == "sub":
        return a - b
    if k == "mul":
        return a * b
    if k == "div":
        if b == 0:
            return None
        return a / b
    raise ValueError(f"unknown node kind {k!r}")


# ---------------------------------------------------------------------------
# signed-log evaluation
#
# Tail diagnostics need |g| far below the double-precision underflow floor
# (e.g. exp(-x^2) at x = 1e6).  Values are carried as (log|v|, sign) pairs;
# log-magnitudes stay representable long after v itself underflows.

_LOG_UNDEF = np.nan


def evaluate_log_array(e, xs):
    """Evaluate as ``(logmag, sign)`` arrays.

    ``sign`` is -1/0/+1; exact zero is ``(-inf, 0)``; undefined points are
    ``(nan, 0)``.  The represented value is ``sign * exp(logmag)``.
    """
    xs = np.asarray(xs, dtype=float)
    with np.errstate(all="ignore"):
        return _eval_log(e, xs)


def _from_value(v):
    sign = np.sign(v)
    logmag = np.where(v != 0, np.log(np.abs(np.where(v != 0, v, 1.0))), -np.inf)
    logmag = np.where(np.isnan(v), _LOG_UNDEF, logmag)
    sign = np.where(np.isnan(v), 0.0, sign)
    return logmag, sign


def _to_value(logmag, sign):
    v = sign * np.exp(logmag)
    return np.where(np.isnan(logmag), np.nan, v)


def _signed_sum(la, sa, lb, sb):
    # log-sum-exp with signs; exact cancellation collapses to zero
    out_l = np.full_like(la, _LOG_UNDEF)
    out_s = np.zeros_like(sa)
    bad = np.isnan(la) | np.isnan(lb)
    a_zero = (sa == 0) & ~bad
    b_zero = (sb == 0) & ~bad
    out_l[a_zero], out_s[a_zero] = lb[a_zero], sb[a_zero]
    out_l[b_zero], out_s[b_zero] = la[b_zero], sa[b_zero]
    live = ~bad & (sa != 0) & (sb != 0)
    hi = np.maximum(la, lb)
    lo = np.minimum(la, lb)
    d = lo - hi  # <= 0
    same = live & (sa == sb)
    out_l[same] = hi[same] + np.log1p(np.exp(d[same]))
    out_s[same] = sa[same]
    opp = live & (sa != sb)
    cancel = opp & (d == 0)
    out_l[cancel], out_s[cancel] = -np.inf, 0.0
    part = opp & (d < 0)
    out_l[part] = hi[part] + np.log1p(-np.exp(d[part]))
    out_s[part] = np.where(la[part] >= lb[part], sa[part], sb[part])
    # inf + inf of the same sign is fine; inf - inf is indeterminate
    both_inf = live & np.isinf(la) & np.isinf(lb) & (la > 0) & (lb > 0)
    out_l[both_inf & (sa == sb)] = np.inf
    out_l[both_inf & (sa != sb)] = _LOG_UNDEF
    out_s[both_inf & (sa != sb)] = 0.0
    return out_l, out_s


def _eval_log(e, xs):
    k = e.kind
    if k == "const":
        return _from_value(np.full_like(xs, e.value))
    if k == "x":
        return _from_value(xs)
    if k == "pi":
        return _from_value(np.full_like(xs, math.pi))
    la, sa = _eval_log(e.children[0], xs)
    if k == "neg":
        return la, -sa
    if k == "abs":
        return la, np.where(sa == 0, sa, 1.0)
    if k == "exp":
        v = _to_value(la, sa)  # the exponent itself, may be +-inf
        logmag = np.where(np.isnan(v), _LOG_UNDEF, v)
        sign = np.where(np.isnan(v), 0.0, 1.0)
        sign = np.where(v == -np.inf, 0.0, sign)
        logmag = np.where(v == -np.inf, -np.inf, logmag)
        return logmag, sign
    if k == "log":
        # value of log(u) equals u's log-magnitude when u > 0
        w = np.where(sa > 0, la, np.nan)
        return _from_value(w)
    if k in ("sin", "cos"):
        v = _to_value(la, sa)
        fn = np.sin if k == "sin" else np.cos
        w = np.where(np.isfinite(v), fn(np.where(np.isfinite(v), v, 0.0)), np.nan)
        return _from_value(w)
    if k in ("pow", "root"):
        r = e.exponent if k == "pow" else Fraction(1, e.degree)
        out_l = np.full_like(la, _LOG_UNDEF)
        out_s = np.zeros_like(sa)
        ok = ~np.isnan(la)
        pos = ok & (sa > 0)
        out_l[pos] = float(r) * la[pos]
        out_s[pos] = 1.0
        zero = ok & (sa == 0)
        if r > 0:
            out_l[zero], out_s[zero] = -np.inf, 0.0
        elif r == 0:
            out_l[zero], out_s[zero] = 0.0, 1.0
        negm = ok & (sa < 0)
        if r.denominator % 2 == 1:
            out_l[negm] = float(r) * la[negm]
            out_s[negm] = -1.0 if r.numerator % 2 else 1.0
        return out_l, out_s
    lb, sb = _eval_log(e.children[1], xs)
    if k == "add":
        return _signed_sum(la, sa, lb, sb)
    if k == "sub":
        return _signed_sum(la, sa, lb, -sb)
    if k == "mul":
        out_l = la + lb
        out_s = sa * sb
        zero = (sa == 0) | (sb == 0)
        bad = np.isnan(la) | np.isnan(lb)
        out_l = np.where(zero & ~bad, -np.inf, out_l)
        out_l = np.where(bad, _LOG_UNDEF, out_l)
        out_s = np.where(bad, 0.0, out_s)
        return out_l, out_s
    if k == "div":
        bad = np.isnan(la) | np.isnan(lb) | (sb == 0)
        out_l = np.where(bad, _LOG_UNDEF, la - lb)
        out_s = np.where(bad, 0.0, sa * sb)
        out_l = np.where(~bad & (sa == 0), -np.inf, out_l)
        return out_l, out_s
    raise ValueError(f"unknown node kind {k!r}")


# ---------------------------------------------------------------------------
# differentiation

def differentiate(e):
    """Symbolic derivative.

    ``abs`` differentiates to ``u * u' / abs(u)``, which is undefined exactly
    at the zeros of its argument; evaluating there reports the
    non-differentiable point as ``None`` rather than crashing.
    """
    k = e.kind
    if k in ("const", "pi"):
        return ZERO
    if k == "x":
        return ONE
    if k == "neg":
        return neg(differentiate(e.children[0]))
    if k == "add":
        return add(differentiate(e.children[0]), differentiate(e.children[1]))
    if k == "sub":
        return sub(differentiate(e.children[0]), differentiate(e.children[1]))
    if k == "mul":
        u, v = e.children
        return add(mul(differentiate(u), v), mul(u, differentiate(v)))
    if k == "div":
        u, v = e.children
        return div(sub(mul(differentiate(u), v), mul(u, differentiate(v))),
                   pow_rational(v, Fraction(2)))
    if k == "exp":
        (u,) = e.children
        return mul(differentiate(u), e)
    if k == "log":
        (u,) = e.children
        return div(differentiate(u), u)
    if k == "pow":
        (u,) = e.children
        r = e.exponent
        return mul(mul(const(float(r)), pow_rational(u, r - 1)), differentiate(u))
    if k == "root":
        (u,) = e.children
        # d u^(1/n) = u' * u^(1/n) / (n u)
        return div(mul(differentiate(u), e), mul(const(e.degree), u))
    if k == "abs":
        (u,) = e.children
        return mul(div(u, e), differentiate(u))
    if k == "sin":
        (u,) = e.children
        return mul(cos_of(u), differentiate(u))
    if k == "cos":
        (u,) = e.children
        return neg(mul(sin_of(u), differentiate(u)))
    raise ValueError(f"unknown node kind {k!r}")


def substitute_x(e, replacement):
    """Replace every ``x`` leaf by ``replacement``."""
    if e.kind == "x":
        return replacement
    if not e.children:
        return e
    return Expr(e.kind, tuple(substitute_x(c, replacement) for c in e.children),
                e.value, e.exponent, e.degree)


def reflect(e):
    """The tree of ``g(-x)``."""
    return substitute_x(e, Expr("neg", (X,)))


# ---------------------------------------------------------------------------
# classification

@dataclass(frozen=True)
class TailConfig:
    """A geometric sampling window ``[start, end]`` with ``points`` samples."""

    start: float = 50.0
    end: float = 1e6
    points: int = 4096

    def samples(self):
        return np.geomspace(self.start, self.end, self.points)

    @staticmethod
    def ratio_default():
        return TailConfig(1e3, 1e9, 8192)


@dataclass(frozen=True)
class TriState:
    """'yes' / 'no' / 'unknown', with the witness tail start for 'yes'."""

    state: str
    witness: float | None = None

    def __bool__(self):
        return self.state == "yes"


@dataclass(frozen=True)
class DecayClass:
    kind: str  # super_exponential | exponential | subexponential | none
    rate: float | None = None


@dataclass(frozen=True)
class ClassReport:
    is_le: bool
    is_extended_hardy: bool
    singular_points: tuple[float, ...]
    ultimately_positive: TriState
    ultimately_decreasing_abs: TriState
    decay_class: DecayClass
    square_integrable: str  # yes | no | unknown
    window: tuple[float, float]

    def to_json_dict(self):
        return {
            "is_le": self.is_le,
            "is_extended_hardy": self.is_extended_hardy,
            "singular_points": list(self.singular_points),
            "ultimately_positive": {"state": self.ultimately_positive.state,
                                    "witness": self.ultimately_positive.witness},
            "ultimately_decreasing_abs": {"state": self.ultimately_decreasing_abs.state,
                                          "witness": self.ultimately_decreasing_abs.witness},
            "decay_class": {"kind": self.decay_class.kind, "rate": self.decay_class.rate},
            "square_integrable": self.square_integrable,
            "window": list(self.window),
        }


def _walk(e):
    yield e
    for c in e.children:
        yield from _walk(c)


def is_le_syntactic(e):
    """True when the tree uses only field ops, exp, log and roots."""
    return all(node.kind not in ("sin", "cos", "abs") for node in _walk(e))


def _arg_bounded_on_tail(arg, xs):
    vals = evaluate_array(arg, xs)
    finite = vals[np.isfinite(vals)]
    if finite.size < xs.size // 2:
        return False
    half = finite.size // 2
    first = np.max(np.abs(finite[:half])) if half else 0.0
    second = np.max(np.abs(finite[half:]))
    return bool(np.isfinite(second) and second <= first * 1.2 + 1.0)


def _arg_constant_sign_on_tail(arg, xs):
    vals = evaluate_array(arg, xs)
    if np.isnan(vals).any():
        return False
    return bool(np.all(vals >= 0) or np.all(vals <= 0))


def is_extended_hardy(e, cfg=None):
    """LE plus trig atoms with bounded arguments (checked on the tail window).

    ``abs`` is tolerated when its argument keeps one sign on the tail, since
    it then agrees with plus-or-minus its argument beyond some point.
    """
    cfg = cfg or TailConfig()
    xs = cfg.samples()
    for node in _walk(e):
        if node.kind in ("sin", "cos") and not _arg_bounded_on_tail(node.children[0], xs):
            return False
        if node.kind == "abs" and not _arg_constant_sign_on_tail(node.children[0], xs):
            return False
    return True


def _tri_state_from_violations(xs, ok):
    """Decide 'ultimately P' from a boolean sample vector.

    yes when the violations (if any) stop before the midpoint of the window,
    no when they persist into the last quarter, unknown otherwise.  A 'yes'
    is never reported when the final sample violates P.
    """
    n = len(ok)
    if n == 0:
        return TriState("unknown")
    bad = np.flatnonzero(~ok)
    if bad.size == 0:
        return TriState("yes", float(xs[0]))
    last_bad = bad[-1]
    if last_bad < n // 2:
        return TriState("yes", float(xs[last_bad + 1]))
    if last_bad >= (3 * n) // 4:
        return TriState("no")
    return TriState("unknown")


def _window_slopes(xs, logmag, n_windows):
    """Least-squares slopes of log|g| against x on doubling subwindows."""
    x0, x1 = xs[0], xs[-1]
    edges = x0 * 2.0 ** np.arange(n_windows + 1)
    edges[-1] = max(edges[-1], x1 * 1.0000001)
    slopes = []
    for i in range(n_windows):
        m = (xs >= edges[i]) & (xs < edges[i + 1]) & np.isfinite(logmag)
        if m.sum() < 8:
            slopes.append(None)
            continue
        xw, yw = xs[m], logmag[m]
        xc = xw - xw.mean()
        denom = float(np.dot(xc, xc))
        slopes.append(float(np.dot(xc, yw - yw.mean()) / denom) if denom > 0 else None)
    return slopes


def _decay_class(xs, logmag):
    finite = np.isfinite(logmag)
    if finite.sum() < 32:
        return DecayClass("none")
    n_windows = max(3, int(math.floor(math.log2(xs[-1] / xs[0]))))
    slopes = [s for s in _window_slopes(xs, logmag, n_windows) if s is not None]
    if len(slopes) < 3:
        return DecayClass("none")
    total_drop = float(np.nanmax(logmag[finite][: len(logmag) // 8 + 1])
                       - np.nanmax(logmag[finite][-len(logmag) // 8 - 1:]))
    tail = slopes[-4:] if len(slopes) >= 4 else slopes
    neg_tail = all(s < 0 for s in tail)
    ratios = [tail[i + 1] / tail[i] for i in range(len(tail) - 1)] if neg_tail else []
    if neg_tail and ratios and all(r >= 1.5 for r in ratios):
        return DecayClass("super_exponential")
    if neg_tail and abs(tail[-1] - tail[-2]) <= 0.1 * abs(tail[-1]) and tail[-1] < -1e-8:
        return DecayClass("exponential", rate=-0.5 * (tail[-1] + tail[-2]))
    if neg_tail and all(r <= 0.9 for r in ratios) and total_drop > 1.0:
        return DecayClass("subexponential")
    if total_drop > 2.0 and neg_tail:
        return DecayClass("subexponential")
    return DecayClass("none")


def _loglog_slope(xs, logmag):
    m = np.isfinite(logmag)
    if m.sum() < 16:
        return None
    lx = np.log(xs[m])
    y = logmag[m]
    lc = lx - lx.mean()
    denom = float(np.dot(lc, lc))
    if denom == 0:
        return None
    return float(np.dot(lc, y - y.mean()) / denom)


def _tail_l2_verdict(xs, logmag, decay):
    if decay.kind in ("super_exponential", "exponential"):
        return "yes"
    if decay.kind == "subexponential":
        p = _loglog_slope(xs, logmag)
        if p is None:
            return "unknown"
        if p < -0.55:
            return "yes"
        if p > -0.45:
            return "no"
        return "unknown"
    # no decay detected: not square-integrable if the tail stays up
    finite = logmag[np.isfinite(logmag)]
    if finite.size < 16:
        return "unknown"
    k = max(8, finite.size // 8)
    if np.max(finite[-k:]) >= np.max(finite[:k]) - 0.5:
        return "no"
    return "unknown"


def _singular_candidates(e, bound=50.0, samples=20001):
    """Locate zeros-with-sign-change of the arguments that can break analyticity."""
    targets = []
    for node in _walk(e):
        if node.kind == "abs":
            targets.append(node.children[0])
        elif node.kind == "root" and node.degree % 2 == 0:
            targets.append(node.children[0])
        elif node.kind == "log":
            targets.append(node.children[0])
        elif node.kind == "div":
            targets.append(node.children[1])
    xs = np.linspace(-bound, bound, samples)
    out = set()
    for arg in targets:
        vals = evaluate_array(arg, xs)
        sign = np.sign(vals)
        for i in np.flatnonzero((sign[:-1] * sign[1:] < 0) & np.isfinite(vals[:-1]) & np.isfinite(vals[1:])):
            root = _bisect_zero(arg, xs[i], xs[i + 1])
            if root is not None:
                out.add(round(root, 9))
        zero_hits = np.flatnonzero(vals == 0)
        for i in zero_hits:
            out.add(round(float(xs[i]), 9))
        if len(out) > 64:
            break
    return sorted(out)


def _bisect_zero(arg, lo, hi, iters=80):
    flo = evaluate(arg, lo)
    fhi = evaluate(arg, hi)
    if flo is None or fhi is None or flo * fhi > 0:
        return None
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = evaluate(arg, mid)
        if fm is None:
            return None
        if fm == 0:
            return mid
        if flo * fm < 0:
            hi = mid
        else:
            lo, flo = mid, fm
    return 0.5 * (lo + hi)


def _confirmed_singular(e, p):
    """Keep a candidate only if g is undefined there or shows a derivative jump."""
    gp = evaluate(e, p)
    if gp is None or not math.isfinite(gp):
        return True
    jumps = []
    for h in (1e-4, 1e-5):
        right = evaluate(e, p + h)
        left = evaluate(e, p - h)
        centre_r = evaluate(e, p + 2 * h)
        centre_l = evaluate(e, p - 2 * h)
        if None in (right, left, centre_r, centre_l):
            return True
        d_plus = (centre_r - right) / h
        d_minus = (left - centre_l) / h
        jumps.append(abs(d_plus - d_minus))
    scale = 1.0 + abs(jumps[0])
    # a genuine kink keeps the one-sided slope gap as h shrinks
    return jumps[1] > 1e-6 * scale and jumps[1] > 0.3 * jumps[0]


def classify(e, tail_cfg=None):
    """Classify the generator's syntax class, tail behavior, and decay.

    Tri-state answers degrade to ``unknown`` instead of guessing; ``yes``
    answers carry the witness tail start.  The minus tail (needed for the
    square-integrability call) is examined through ``g(-x)``.
    """
    cfg = tail_cfg or TailConfig()
    xs = cfg.samples()
    le = is_le_syntactic(e)
    extended = True if le else is_extended_hardy(e, cfg)

    logmag, sign = evaluate_log_array(e, xs)
    defined = ~np.isnan(logmag)
    frac_defined = float(defined.mean()) if len(xs) else 0.0

    if frac_defined < 0.7:
        positive = TriState("unknown")
        decreasing = TriState("unknown")
        decay = DecayClass("none")
        plus_l2 = "unknown"
    else:
        positive = _tri_state_from_violations(xs, (sign > 0) & defined)
        drop = np.diff(logmag)
        ok_steps = defined[:-1] & defined[1:] & ~(drop > 1e-10 + 1e-12 * np.abs(logmag[:-1]))
        decreasing = _tri_state_from_violations(xs[:-1], ok_steps)
        decay = _decay_class(xs, logmag)
        plus_l2 = _tail_l2_verdict(xs, logmag, decay)

    mirrored = reflect(e)
    mlogmag, _msign = evaluate_log_array(mirrored, xs)
    if np.isnan(mlogmag).mean() > 0.3:
        minus_l2 = "unknown"
    else:
        minus_l2 = _tail_l2_verdict(xs, mlogmag, _decay_class(xs, mlogmag))

    local_l2 = _local_l2_ok(e)
    if "no" in (plus_l2, minus_l2, local_l2):
        square = "no"
    elif plus_l2 == minus_l2 == local_l2 == "yes":
        square = "yes"
    else:
        square = "unknown"

    singular = tuple(p for p in _singular_candidates(e) if _confirmed_singular(e, p))

    return ClassReport(
        is_le=le,
        is_extended_hardy=extended,
        singular_points=singular,
        ultimately_positive=positive,
        ultimately_decreasing_abs=decreasing,
        decay_class=decay,
        square_integrable=square,
        window=(cfg.start, cfg.end),
    )


def _local_l2_ok(e, half_width=50.0, samples=4001):
    xs = np.linspace(-half_width, half_width, samples)
    vals = evaluate_array(e, xs)
    finite = np.isfinite(vals)
    if finite.mean() < 0.95:
        return "unknown"
    peak = float(np.max(np.abs(vals[finite]))) if finite.any() else 0.0
    if peak > 1e8:
        return "unknown"
    return "yes"
