"""Tokenizer and recursive-descent parser for the M-subset language.

The subset covers: function definitions with multiple outputs, single and
destructuring assignment (`~` discards a result slot), if/else, `for i = a:b`,
`while`, numeric literals, ranges `a:b` and `end` inside subscripts, calls,
and the operator family {+ - * / ./ .* > < >= <= ==}. Parenthesized forms
`name(...)` are parsed uniformly as Call nodes; telling indexing apart from
calling is the analysis pass's job.

Tokenizing note: `60./RR` is a number followed by the elementwise divide,
never the number `60.` followed by `/`. A trailing-dot literal (`60.`) is
still accepted when no elementwise operator follows.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .errors import RetargetError

KEYWORDS = frozenset({"function", "if", "else", "end", "for", "while"})
PLACEHOLDER = "~"

_TWO_CHAR_OPS = ("==", ">=", "<=", "./", ".*")
_ONE_CHAR_OPS = "=><+-*/"
_PUNCT = "()[],;:"


class LexError(RetargetError):
    def __init__(self, line: int, col: int, char: str):
        super().__init__(f"line {line}, col {col}: unexpected character {char!r}")
        self.line = line
        self.col = col
        self.char = char


class ParseError(RetargetError):
    def __init__(self, line: int, col: int, expected: str, found: str, note: str = ""):
        msg = f"line {line}, col {col}: expected {expected}, found {found}"
        if note:
            msg += f" ({note})"
        super().__init__(msg)
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


@dataclass(frozen=True)
class Token:
    kind: str  # identifier | number | keyword | operator | punctuation | tilde | comment | newline
    lexeme: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    """Deterministic token list; comments and newlines are kept as tokens."""
    tokens: list[Token] = []
    i = 0
    line = 1
    col = 1
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t":
            i += 1
            col += 1
            continue
        if ch == "\r":  # tolerate CRLF input
            i += 1
            continue
        if ch == "\n":
            tokens.append(Token("newline", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch == "%":
            j = i
            while j < n and source[j] != "\n":
                j += 1
            tokens.append(Token("comment", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                nxt = source[j + 1] if j + 1 < n else ""
                if nxt.isdigit():
                    j += 1
                    while j < n and source[j].isdigit():
                        j += 1
                elif nxt not in ("/", "*"):
                    j += 1  # trailing-dot literal like `60.`
                # a following '/' or '*' claims the dot for ./ or .*
            lexeme = source[i:j]
            tokens.append(Token("number", lexeme, line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            lexeme = source[i:j]
            kind = "keyword" if lexeme in KEYWORDS else "identifier"
            tokens.append(Token(kind, lexeme, line, col))
            col += j - i
            i = j
            continue
        if ch == "~":
            tokens.append(Token("tilde", "~", line, col))
            i += 1
            col += 1
            continue
        two = source[i : i + 2]
        if two in _TWO_CHAR_OPS:
            tokens.append(Token("operator", two, line, col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR_OPS:
            tokens.append(Token("operator", ch, line, col))
            i += 1
            col += 1
            continue
        if ch in _PUNCT:
            tokens.append(Token("punctuation", ch, line, col))
            i += 1
            col += 1
            continue
        raise LexError(line, col, ch)
    return tokens


def reconstruct(tokens: list[Token]) -> str:
    """Rebuild source text from tokens, padding with spaces to each token's
    recorded column (exact for space-indented, LF-terminated sources)."""
    out: list[str] = []
    line = 1
    col = 1
    for t in tokens:
        if t.kind == "newline":
            out.append("\n")
            line += 1
            col = 1
            continue
        if t.col > col:
            out.append(" " * (t.col - col))
        out.append(t.lexeme)
        col = t.col + len(t.lexeme)
    return "".join(out)


# ---------------------------------------------------------------------------
# AST


@dataclass
class Num:
    value: float
    literal: str = field(default="", compare=False)
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Var:
    name: str
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Call:
    name: str
    args: list
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Index:
    """Produced by the analysis pass when a Call target is a variable."""

    base: str
    subscript: object
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Binary:
    op: str
    lhs: object
    rhs: object
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Unary:
    op: str
    operand: object
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class RangeExpr:
    start: object
    stop: object
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class EndMarker:
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Expr = Union[Num, Var, Call, Index, Binary, Unary, RangeExpr, EndMarker]


@dataclass
class Assign:
    targets: list  # identifiers, or PLACEHOLDER for a discarded slot
    expr: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class If:
    cond: Expr
    then: list
    orelse: list
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class For:
    var: str
    start: Expr
    stop: Expr
    body: list
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class While:
    cond: Expr
    body: list
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class ExprStmt:
    expr: Expr
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


Stmt = Union[Assign, If, For, While, ExprStmt]


@dataclass
class FunctionDef:
    name: str
    outputs: list
    params: list
    body: list
    line: int = field(default=0, compare=False)
    col: int = field(default=0, compare=False)


@dataclass
class Program:
    functions: list


# ---------------------------------------------------------------------------
# Parser

_CMP_OPS = (">", "<", ">=", "<=", "==")
_ADD_OPS = ("+", "-")
_MUL_OPS = ("*", "/", "./", ".*")


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = [t for t in tokens if t.kind != "comment"]
        self.i = 0
        self.paren_depth = 0  # `end` is a subscript marker only inside parens

    def _eof_token(self) -> Token:
        if self.tokens:
            last = self.tokens[-1]
            return Token("eof", "", last.line, last.col + len(last.lexeme))
        return Token("eof", "", 1, 1)

    def peek(self, offset: int = 0) -> Token:
        j = self.i + offset
        if j < len(self.tokens):
            return self.tokens[j]
        return self._eof_token()

    def at_end(self) -> bool:
        return self.i >= len(self.tokens)

    def advance(self) -> Token:
        t = self.peek()
        self.i += 1
        return t

    def check(self, kind: str, lexeme: str | None = None) -> bool:
        t = self.peek()
        return t.kind == kind and (lexeme is None or t.lexeme == lexeme)

    def expect(self, kind: str, lexeme: str | None = None, what: str | None = None) -> Token:
        t = self.peek()
        if t.kind == kind and (lexeme is None or t.lexeme == lexeme):
            return self.advance()
        expected = what or (lexeme if lexeme is not None else kind)
        found = "end of input" if t.kind == "eof" else repr(t.lexeme)
        raise ParseError(t.line, t.col, expected, found)

    def skip_newlines(self):
        while self.check("newline"):
            self.advance()

    # -- program structure

    def parse_program(self) -> Program:
        self.skip_newlines()
        functions = []
        while not self.at_end():
            fn = self.parse_function()
            for prev in functions:
                if prev.name == fn.name:
                    raise ParseError(fn.line, fn.col, "unique function name",
                                     repr(fn.name), "duplicate definition")
            functions.append(fn)
            self.skip_newlines()
        if not functions:
            t = self._eof_token()
            raise ParseError(t.line, t.col, "'function'", "end of input")
        return Program(functions)

    def parse_function(self) -> FunctionDef:
        kw = self.expect("keyword", "function")
        outputs: list[str] = []
        if self.check("punctuation", "["):
            self.advance()
            while not self.check("punctuation", "]"):
                if self.check("tilde"):
                    t = self.peek()
                    raise ParseError(t.line, t.col, "output name", "'~'",
                                     "placeholders are not allowed in a function header")
                outputs.append(self.expect("identifier").lexeme)
                if self.check("punctuation", ","):
                    self.advance()
            self.expect("punctuation", "]")
            self.expect("operator", "=")
            name = self.expect("identifier").lexeme
        else:
            first = self.expect("identifier").lexeme
            if self.check("operator", "="):
                self.advance()
                outputs = [first]
                name = self.expect("identifier").lexeme
            else:
                name = first
        if len(set(outputs)) != len(outputs):
            raise ParseError(kw.line, kw.col, "distinct output names", repr(outputs))

        params: list[str] = []
        if self.check("punctuation", "("):
            self.advance()
            while not self.check("punctuation", ")"):
                params.append(self.expect("identifier").lexeme)
                if self.check("punctuation", ","):
                    self.advance()
            self.expect("punctuation", ")")
        if len(set(params)) != len(params):
            raise ParseError(kw.line, kw.col, "distinct parameter names", repr(params))

        self._end_of_statement()
        body = self.parse_block(("end", "function"))
        if self.check("keyword", "end"):
            self.advance()
            self._end_of_statement(optional=True)
        return FunctionDef(name, outputs, params, body, line=kw.line, col=kw.col)

    def parse_block(self, stop_keywords: tuple) -> list:
        stmts = []
        self.skip_newlines()
        while not self.at_end():
            t = self.peek()
            if t.kind == "keyword" and t.lexeme in stop_keywords:
                break
            stmts.append(self.parse_stmt())
            self.skip_newlines()
        return stmts

    def _end_of_statement(self, optional: bool = False):
        if self.check("punctuation", ";"):
            self.advance()
            return
        if self.check("newline"):
            return
        if self.at_end():
            return
        t = self.peek()
        if t.kind == "keyword" and t.lexeme in ("end", "else"):
            return
        if optional:
            return
        raise ParseError(t.line, t.col, "';' or newline", repr(t.lexeme))

    # -- statements

    def parse_stmt(self) -> Stmt:
        t = self.peek()
        if t.kind == "keyword":
            if t.lexeme == "if":
                return self.parse_if()
            if t.lexeme == "for":
                return self.parse_for()
            if t.lexeme == "while":
                return self.parse_while()
            raise ParseError(t.line, t.col, "statement", repr(t.lexeme))
        if t.kind == "punctuation" and t.lexeme == "[":
            return self.parse_destructuring()
        if t.kind == "identifier" and self.peek(1).kind == "operator" and self.peek(1).lexeme == "=":
            name = self.advance()
            self.advance()  # '='
            expr = self.parse_expr()
            self._end_of_statement()
            return Assign([name.lexeme], expr, line=name.line, col=name.col)
        expr = self.parse_expr()
        self._end_of_statement()
        return ExprStmt(expr, line=t.line, col=t.col)

    def parse_destructuring(self) -> Assign:
        lb = self.expect("punctuation", "[")
        targets: list[str] = []
        while not self.check("punctuation", "]"):
            if self.check("tilde"):
                self.advance()
                targets.append(PLACEHOLDER)
            else:
                targets.append(self.expect("identifier").lexeme)
            if self.check("punctuation", ","):
                self.advance()
        self.expect("punctuation", "]")
        self.expect("operator", "=")
        expr = self.parse_expr()
        if len(targets) > 1 and not isinstance(expr, Call):
            raise ParseError(lb.line, lb.col, "a call on the right-hand side",
                             type(expr).__name__, "multi-target assignment")
        if not targets:
            raise ParseError(lb.line, lb.col, "at least one target", "'[]'")
        self._end_of_statement()
        return Assign(targets, expr, line=lb.line, col=lb.col)

    def parse_if(self) -> If:
        kw = self.expect("keyword", "if")
        cond = self.parse_expr()
        self._end_of_statement(optional=True)
        then = self.parse_block(("else", "end"))
        orelse: list = []
        if self.check("keyword", "else"):
            self.advance()
            self._end_of_statement(optional=True)
            orelse = self.parse_block(("end",))
        self._expect_block_end("if", kw)
        return If(cond, then, orelse, line=kw.line, col=kw.col)

    def parse_for(self) -> For:
        kw = self.expect("keyword", "for")
        var = self.expect("identifier").lexeme
        self.expect("operator", "=")
        start = self.parse_expr()
        self.expect("punctuation", ":")
        stop = self.parse_expr()
        self._end_of_statement(optional=True)
        body = self.parse_block(("end",))
        self._expect_block_end("for", kw)
        return For(var, start, stop, body, line=kw.line, col=kw.col)

    def parse_while(self) -> While:
        kw = self.expect("keyword", "while")
        cond = self.parse_expr()
        self._end_of_statement(optional=True)
        body = self.parse_block(("end",))
        self._expect_block_end("while", kw)
        return While(cond, body, line=kw.line, col=kw.col)

    def _expect_block_end(self, opener: str, kw: Token):
        t = self.peek()
        if t.kind == "keyword" and t.lexeme == "end":
            self.advance()
            self._end_of_statement(optional=True)
            return
        found = "end of input" if t.kind == "eof" else repr(t.lexeme)
        raise ParseError(t.line, t.col, "'end'", found,
                         f"'{opener}' opened at line {kw.line} is not terminated")

    # -- expressions

    def parse_expr(self) -> Expr:
        return self.parse_comparison()

    def parse_comparison(self) -> Expr:
        left = self.parse_additive()
        while self.peek().kind == "operator" and self.peek().lexeme in _CMP_OPS:
            op = self.advance()
            right = self.parse_additive()
            left = Binary(op.lexeme, left, right, line=op.line, col=op.col)
        return left

    def parse_additive(self) -> Expr:
        left = self.parse_multiplicative()
        while self.peek().kind == "operator" and self.peek().lexeme in _ADD_OPS:
            op = self.advance()
            right = self.parse_multiplicative()
            left = Binary(op.lexeme, left, right, line=op.line, col=op.col)
        return left

    def parse_multiplicative(self) -> Expr:
        left = self.parse_unary()
        while self.peek().kind == "operator" and self.peek().lexeme in _MUL_OPS:
            op = self.advance()
            right = self.parse_unary()
            left = Binary(op.lexeme, left, right, line=op.line, col=op.col)
        return left

    def parse_unary(self) -> Expr:
        if self.check("operator", "-"):
            op = self.advance()
            operand = self.parse_unary()
            return Unary("-", operand, line=op.line, col=op.col)
        return self.parse_primary()

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "number":
            self.advance()
            return Num(float(t.lexeme), t.lexeme, line=t.line, col=t.col)
        if t.kind == "identifier":
            self.advance()
            if self.check("punctuation", "("):
                return self.parse_paren_suffix(t)
            return Var(t.lexeme, line=t.line, col=t.col)
        if t.kind == "keyword" and t.lexeme == "end":
            if self.paren_depth == 0:
                raise ParseError(t.line, t.col, "expression", "'end'",
                                 "'end' is only valid inside a subscript")
            self.advance()
            return EndMarker(line=t.line, col=t.col)
        if t.kind == "punctuation" and t.lexeme == "(":
            self.advance()
            self.paren_depth += 1
            try:
                inner = self.parse_expr()
            finally:
                self.paren_depth -= 1
            self.expect("punctuation", ")")
            return inner
        found = "end of input" if t.kind == "eof" else repr(t.lexeme)
        raise ParseError(t.line, t.col, "expression", found)

    def parse_paren_suffix(self, name_tok: Token) -> Call:
        self.expect("punctuation", "(")
        self.paren_depth += 1
        args: list[Expr] = []
        try:
            while not self.check("punctuation", ")"):
                args.append(self.parse_arg())
                if self.check("punctuation", ","):
                    self.advance()
        finally:
            self.paren_depth -= 1
        self.expect("punctuation", ")")
        return Call(name_tok.lexeme, args, line=name_tok.line, col=name_tok.col)

    def parse_arg(self) -> Expr:
        """One argument; `a:b` ranges are accepted here because subscripts
        and call arguments are indistinguishable before analysis."""
        start = self.parse_expr()
        if self.check("punctuation", ":"):
            colon = self.advance()
            stop = self.parse_expr()
            return RangeExpr(start, stop, line=colon.line, col=colon.col)
        return start


def parse(tokens: list[Token]) -> Program:
    """Parse a token list (from tokenize) into a Program."""
    return _Parser(tokens).parse_program()


def parse_source(source: str) -> Program:
    return parse(tokenize(source))


# ---------------------------------------------------------------------------
# Pretty printer (M-subset surface form; used for round-trip checks)

_PRECEDENCE = {
    ">": 1, "<": 1, ">=": 1, "<=": 1, "==": 1,
    "+": 2, "-": 2,
    "*": 3, "/": 3, "./": 3, ".*": 3,
}
_UNARY_PREC = 4


def _literal_text(n: Num) -> str:
    lit = n.literal
    if lit.endswith("."):
        lit = lit + "0"
    if not lit:
        lit = repr(n.value)
        if lit.endswith(".0"):
            lit = lit[:-2]
    return lit


def _print_expr(e: Expr, min_prec: int = 0) -> str:
    """Render with parentheses exactly where reparsing needs them: a node
    whose precedence is below `min_prec` gets wrapped."""
    if isinstance(e, Num):
        return _literal_text(e)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, EndMarker):
        return "end"
    if isinstance(e, Call):
        return f"{e.name}({','.join(_print_expr(a) for a in e.args)})"
    if isinstance(e, Index):
        return f"{e.base}({_print_expr(e.subscript)})"
    if isinstance(e, RangeExpr):
        return f"{_print_expr(e.start)}:{_print_expr(e.stop)}"
    if isinstance(e, Unary):
        text = f"-{_print_expr(e.operand, _UNARY_PREC)}"
        return f"({text})" if _UNARY_PREC < min_prec else text
    if isinstance(e, Binary):
        prec = _PRECEDENCE[e.op]
        text = f"{_print_expr(e.lhs, prec)}{e.op}{_print_expr(e.rhs, prec + 1)}"
        return f"({text})" if prec < min_prec else text
    raise TypeError(f"unknown expression node: {e!r}")


def _print_stmt(s: Stmt, indent: int, out: list):
    pad = "    " * indent
    if isinstance(s, Assign):
        if len(s.targets) == 1 and s.targets[0] != PLACEHOLDER:
            out.append(f"{pad}{s.targets[0]} = {_print_expr(s.expr)};")
        else:
            lhs = ",".join(s.targets)
            out.append(f"{pad}[{lhs}] = {_print_expr(s.expr)};")
    elif isinstance(s, ExprStmt):
        out.append(f"{pad}{_print_expr(s.expr)};")
    elif isinstance(s, If):
        out.append(f"{pad}if {_print_expr(s.cond)}")
        for st in s.then:
            _print_stmt(st, indent + 1, out)
        if s.orelse:
            out.append(f"{pad}else")
            for st in s.orelse:
                _print_stmt(st, indent + 1, out)
        out.append(f"{pad}end")
    elif isinstance(s, For):
        out.append(f"{pad}for {s.var} = {_print_expr(s.start)}:{_print_expr(s.stop)}")
        for st in s.body:
            _print_stmt(st, indent + 1, out)
        out.append(f"{pad}end")
    elif isinstance(s, While):
        out.append(f"{pad}while {_print_expr(s.cond)}")
        for st in s.body:
            _print_stmt(st, indent + 1, out)
        out.append(f"{pad}end")
    else:
        raise TypeError(f"unknown statement node: {s!r}")


def pretty_print(program: Program) -> str:
    """Render a Program back to M-subset source."""
    out: list[str] = []
    for fn in program.functions:
        header = "function "
        if len(fn.outputs) == 1:
            header += f"{fn.outputs[0]} = "
        elif fn.outputs:
            header += f"[{','.join(fn.outputs)}] = "
        header += f"{fn.name}({','.join(fn.params)})"
        out.append(header)
        for st in fn.body:
            _print_stmt(st, 0, out)
        out.append("")
    return "\n".join(out)
