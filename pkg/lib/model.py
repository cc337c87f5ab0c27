"""
ODE Models

Arithmetic expression parsing/evaluation and the SystemModel type.

Models are written on the fast time scale, z' = F(z; lambda, eps), with the
singular-perturbation parameter and the bifurcation parameter named in the
model metadata. Built-in models (van der Pol, FitzHugh-Nagumo) carry native
evaluators that perform the same float operations, in the same order, as
their expression strings.

Grammar (precedence low to high):
    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := primary ('^' unary)?
    primary := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

So "-x^2" is -(x^2) and "a^b^c" is a^(b^c).
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache
from pathlib import Path
from types import MappingProxyType
from typing import Any, Callable, Iterable, Mapping, Sequence

import jsonschema
import numpy as np
from returns.result import Failure, Result, Success

from fp_utils import (
    ConfigError,
    EvaluationError,
    ExpressionSyntaxError,
    UnknownIdentifierError,
    load_json,
)
from logger import get_logger

logger = get_logger(__name__)

CONFIG_DIR = Path(__file__).parent.parent / "config"
MODEL_SCHEMA_PATH = CONFIG_DIR / "schemas" / "model.schema.json"

FUNCTIONS: dict[str, Callable[[float], float]] = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "abs": abs,
}

# Identifiers available to normal-form h-evaluators
NORMAL_FORM_IDENTIFIERS = ("x", "y", "lambda", "eps")

Bindings = Mapping[str, float]


# ============================================================================
# Expression AST
# ============================================================================

class NodeKind(Enum):
    CONSTANT = "constant"
    VARIABLE = "variable"
    NEGATE = "negate"
    BINARY = "binary"
    CALL = "call"


BINARY_OPS = ("+", "-", "*", "/", "^")


def _power(base: float, exponent: float) -> float:
    if base < 0.0 and not float(exponent).is_integer():
        raise ValueError(f"negative base {base!r} with non-integer exponent {exponent!r}")
    return base ** exponent


_BINARY_IMPL: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "^": _power,
}


@dataclass(frozen=True)
class ExprAst:
    """
    Immutable expression tree node.

    `symbol` is the identifier for VARIABLE, the operator for BINARY and the
    function name for CALL. `value` is only set for CONSTANT.
    """
    kind: NodeKind
    children: tuple['ExprAst', ...] = ()
    value: float | None = None
    symbol: str | None = None

    def __post_init__(self) -> None:
        arity = {
            NodeKind.CONSTANT: 0, NodeKind.VARIABLE: 0, NodeKind.NEGATE: 1,
            NodeKind.BINARY: 2, NodeKind.CALL: 1,
        }[self.kind]
        if len(self.children) != arity:
            raise ValueError(f"{self.kind.value} node needs {arity} children, got {len(self.children)}")
        if self.kind is NodeKind.BINARY and self.symbol not in BINARY_OPS:
            raise ValueError(f"unknown binary operator {self.symbol!r}")
        if self.kind is NodeKind.CALL and self.symbol not in FUNCTIONS:
            raise ValueError(f"unknown function {self.symbol!r}")
        if self.kind is NodeKind.CONSTANT and self.value is None:
            raise ValueError("constant node without value")
        if self.kind is NodeKind.VARIABLE and not self.symbol:
            raise ValueError("variable node without identifier")

    # --- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value: float) -> 'ExprAst':
        return cls(NodeKind.CONSTANT, value=float(value))

    @classmethod
    def variable(cls, name: str) -> 'ExprAst':
        return cls(NodeKind.VARIABLE, symbol=name)

    @classmethod
    def negate(cls, child: 'ExprAst') -> 'ExprAst':
        return cls(NodeKind.NEGATE, children=(child,))

    @classmethod
    def binary(cls, op: str, left: 'ExprAst', right: 'ExprAst') -> 'ExprAst':
        return cls(NodeKind.BINARY, children=(left, right), symbol=op)

    @classmethod
    def call(cls, name: str, arg: 'ExprAst') -> 'ExprAst':
        return cls(NodeKind.CALL, children=(arg,), symbol=name)

    # --- queries ----------------------------------------------------------

    def identifiers(self) -> frozenset[str]:
        """Variable identifiers referenced anywhere in the tree."""
        if self.kind is NodeKind.VARIABLE:
            return frozenset({self.symbol})  # type: ignore[arg-type]
        names: frozenset[str] = frozenset()
        for child in self.children:
            names |= child.identifiers()
        return names

    def to_text(self) -> str:
        """Fully parenthesized text that re-parses to an equivalent tree."""
        if self.kind is NodeKind.CONSTANT:
            text = repr(self.value)
            return f"({text})" if self.value < 0 else text  # type: ignore[operator]
        if self.kind is NodeKind.VARIABLE:
            return self.symbol  # type: ignore[return-value]
        if self.kind is NodeKind.NEGATE:
            return f"(-{self.children[0].to_text()})"
        if self.kind is NodeKind.CALL:
            return f"{self.symbol}({self.children[0].to_text()})"
        left, right = self.children
        return f"({left.to_text()} {self.symbol} {right.to_text()})"

    def __str__(self) -> str:
        return self.to_text()

    # --- evaluation -------------------------------------------------------

    @cached_property
    def compiled(self) -> Callable[[Bindings], float]:
        """Closure tree equivalent to the AST; raises raw Python errors."""
        return self._compile()

    def _compile(self) -> Callable[[Bindings], float]:
        if self.kind is NodeKind.CONSTANT:
            value = self.value
            return lambda env: value  # type: ignore[return-value]
        if self.kind is NodeKind.VARIABLE:
            name = self.symbol
            return lambda env: env[name]  # type: ignore[index]
        if self.kind is NodeKind.NEGATE:
            inner = self.children[0].compiled
            return lambda env: -inner(env)
        if self.kind is NodeKind.CALL:
            func = FUNCTIONS[self.symbol]  # type: ignore[index]
            arg = self.children[0].compiled
            return lambda env: func(arg(env))
        op = _BINARY_IMPL[self.symbol]  # type: ignore[index]
        left, right = (c.compiled for c in self.children)
        return lambda env: op(left(env), right(env))

    def evaluate(self, bindings: Bindings) -> float:
        return eval_expression(self, bindings)


def eval_expression(ast: ExprAst, bindings: Bindings) -> float:
    """
    Evaluate an expression tree.

    Raises:
        UnknownIdentifierError: a variable is not bound
        EvaluationError: division by zero, math domain error, overflow,
            or a non-finite result
    """
    try:
        result = float(ast.compiled(bindings))
    except KeyError as e:
        raise UnknownIdentifierError(str(e.args[0]), ast.to_text()) from None
    except ZeroDivisionError:
        raise EvaluationError(ast.to_text(), "division by zero") from None
    except (ValueError, OverflowError) as e:
        raise EvaluationError(ast.to_text(), str(e)) from None
    if not math.isfinite(result):
        raise EvaluationError(ast.to_text(), f"non-finite result {result!r}")
    return result


# ============================================================================
# Tokenizer / recursive-descent parser
# ============================================================================

@dataclass(frozen=True)
class _Token:
    kind: str      # "num", "ident", "op", "end"
    text: str
    pos: int       # character index


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            start = i
            while i < n and text[i].isdigit():
                i += 1
            if i < n and text[i] == ".":
                i += 1
                while i < n and text[i].isdigit():
                    i += 1
            if i < n and text[i] in "eE":
                j = i + 1
                if j < n and text[j] in "+-":
                    j += 1
                if j < n and text[j].isdigit():
                    i = j
                    while i < n and text[i].isdigit():
                        i += 1
                else:
                    raise ExpressionSyntaxError(text, _byte_offset(text, i), "malformed exponent")
            tokens.append(_Token("num", text[start:i], start))
            continue
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            tokens.append(_Token("ident", text[start:i], start))
            continue
        if ch in "+-*/^()":
            tokens.append(_Token("op", ch, i))
            i += 1
            continue
        raise ExpressionSyntaxError(text, _byte_offset(text, i), f"unexpected character {ch!r}")
    tokens.append(_Token("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, allowed: frozenset[str]):
        self.text = text
        self.allowed = allowed
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def _error(self, reason: str, token: _Token | None = None) -> ExpressionSyntaxError:
        tok = token or self.current
        return ExpressionSyntaxError(self.text, _byte_offset(self.text, tok.pos), reason)

    def _accept(self, op: str) -> bool:
        if self.current.kind == "op" and self.current.text == op:
            self.index += 1
            return True
        return False

    def _expect(self, op: str) -> None:
        if not self._accept(op):
            found = self.current.text or "end of input"
            raise self._error(f"expected '{op}', found {found!r}")

    def parse(self) -> ExprAst:
        tree = self._expr()
        if self.current.kind != "end":
            raise self._error(f"unexpected token {self.current.text!r}")
        return tree

    def _expr(self) -> ExprAst:
        node = self._term()
        while self.current.kind == "op" and self.current.text in "+-":
            op = self.current.text
            self.index += 1
            node = ExprAst.binary(op, node, self._term())
        return node

    def _term(self) -> ExprAst:
        node = self._unary()
        while self.current.kind == "op" and self.current.text in "*/":
            op = self.current.text
            self.index += 1
            node = ExprAst.binary(op, node, self._unary())
        return node

    def _unary(self) -> ExprAst:
        if self._accept("-"):
            return ExprAst.negate(self._unary())
        return self._power()

    def _power(self) -> ExprAst:
        base = self._primary()
        if self._accept("^"):
            # right operand re-enters unary, giving right associativity
            return ExprAst.binary("^", base, self._unary())
        return base

    def _primary(self) -> ExprAst:
        tok = self.current
        if tok.kind == "num":
            self.index += 1
            return ExprAst.constant(float(tok.text))
        if tok.kind == "ident":
            self.index += 1
            if self.current.kind == "op" and self.current.text == "(":
                if tok.text not in FUNCTIONS:
                    raise self._error(f"unknown function '{tok.text}'", tok)
                self.index += 1
                arg = self._expr()
                self._expect(")")
                return ExprAst.call(tok.text, arg)
            if tok.text not in self.allowed:
                raise UnknownIdentifierError(tok.text, self.text)
            return ExprAst.variable(tok.text)
        if self._accept("("):
            inner = self._expr()
            self._expect(")")
            return inner
        if tok.kind == "end":
            raise self._error("unexpected end of input")
        raise self._error(f"unexpected token {tok.text!r}")


def parse_expression(text: str, allowed_identifiers: Iterable[str]) -> ExprAst:
    """
    Parse expression text into an ExprAst.

    Raises:
        ExpressionSyntaxError: with the byte offset of the offending token
        UnknownIdentifierError: naming the first undeclared identifier
    """
    if not text or not text.strip():
        raise ExpressionSyntaxError(text, 0, "empty expression")
    return _Parser(text, frozenset(allowed_identifiers)).parse()


# ============================================================================
# SystemModel
# ============================================================================

NativeRhs = Callable[[Sequence[float], Bindings], Sequence[float]]
NativeJacobian = Callable[[Sequence[float], Bindings], Sequence[Sequence[float]]]


@dataclass(frozen=True)
class SystemModel:
    """
    Immutable ODE system z' = F(z; params) on the fast time scale.

    Parameter changes go through `bind()`, which returns a read-only
    mapping; the model itself never changes after construction.
    """
    name: str
    states: tuple[str, ...]
    params: Mapping[str, float]
    epsilon_param: str
    bifurcation_param: str
    equations: tuple[str, ...]
    rhs: tuple[ExprAst, ...]
    jacobian_exprs: tuple[tuple[ExprAst, ...], ...] | None = None
    normal_form_exprs: tuple[ExprAst, ...] | None = None
    native_rhs: NativeRhs | None = field(default=None, compare=False)
    native_jacobian: NativeJacobian | None = field(default=None, compare=False)
    description: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", MappingProxyType(dict(self.params)))
        _check_model_invariants(self)

    @property
    def dimension(self) -> int:
        return len(self.states)

    @property
    def has_jacobian(self) -> bool:
        return self.native_jacobian is not None or self.jacobian_exprs is not None

    @property
    def has_normal_form(self) -> bool:
        return self.normal_form_exprs is not None

    def bind(self, **overrides: float) -> Mapping[str, float]:
        """Parameter binding with overrides applied; the model is untouched."""
        unknown = sorted(set(overrides) - set(self.params))
        if unknown:
            raise UnknownIdentifierError(unknown[0], f"parameters of model '{self.name}'")
        merged = {**self.params, **{k: float(v) for k, v in overrides.items()}}
        for key, value in merged.items():
            if not math.isfinite(value):
                raise EvaluationError(f"{key}={value!r}", "parameter must be finite")
        return MappingProxyType(merged)

    def bind_lambda(self, lam: float, epsilon: float | None = None, params: Bindings | None = None) -> Mapping[str, float]:
        """Shortcut for binding the bifurcation parameter (and optionally eps)."""
        base = dict(params) if params is not None else {}
        base[self.bifurcation_param] = lam
        if epsilon is not None:
            base[self.epsilon_param] = epsilon
        return self.bind(**base)

    def _environment(self, state: Sequence[float], params: Bindings) -> dict[str, float]:
        env = dict(params)
        for name, value in zip(self.states, state):
            env[name] = float(value)
        return env

    def evaluate(self, state: Sequence[float], params: Bindings | None = None) -> np.ndarray:
        """F(state; params) as a float array."""
        bound = self.params if params is None else params
        if len(state) != self.dimension:
            raise ValueError(f"state has {len(state)} components, model '{self.name}' has {self.dimension}")
        if self.native_rhs is not None:
            try:
                out = np.array(self.native_rhs([float(v) for v in state], bound), dtype=float)
            except ZeroDivisionError:
                raise EvaluationError(self.name, "division by zero") from None
            except (OverflowError, ValueError) as e:
                raise EvaluationError(self.name, str(e)) from None
            if not np.all(np.isfinite(out)):
                raise EvaluationError(self.name, "non-finite right-hand side")
            return out
        env = self._environment(state, bound)
        return np.array([eval_expression(expr, env) for expr in self.rhs], dtype=float)

    def jacobian_analytic(self, state: Sequence[float], params: Bindings | None = None) -> np.ndarray:
        """Evaluate the analytic Jacobian (native or expression form)."""
        bound = self.params if params is None else params
        if self.native_jacobian is not None:
            return np.array(self.native_jacobian([float(v) for v in state], bound), dtype=float)
        if self.jacobian_exprs is None:
            raise ValueError(f"model '{self.name}' has no analytic Jacobian")
        env = self._environment(state, bound)
        return np.array(
            [[eval_expression(e, env) for e in row] for row in self.jacobian_exprs],
            dtype=float,
        )

    def vector_field(self, params: Bindings | None = None, direction: int = 1) -> Callable[[float, np.ndarray], np.ndarray]:
        """
        Integrator callback (t, z) -> F(z).

        direction=-1 returns the time-reversed field -F.
        """
        if direction not in (1, -1):
            raise ValueError(f"direction must be +1 or -1, got {direction!r}")
        bound = self.bind() if params is None else params
        evaluate = self.evaluate
        sign = float(direction)

        def field_fn(t: float, z: np.ndarray) -> np.ndarray:
            return sign * evaluate(z, bound)

        return field_fn

    def h_evaluators(self) -> list[Callable[[float, float, float, float], float]] | None:
        """The six normal-form evaluators h1..h6 of (x, y, lambda, eps), if declared."""
        if self.normal_form_exprs is None:
            return None

        def make(expr: ExprAst) -> Callable[[float, float, float, float], float]:
            def h(x: float, y: float, lam: float, eps: float) -> float:
                return eval_expression(expr, {"x": x, "y": y, "lambda": lam, "eps": eps})
            return h

        return [make(e) for e in self.normal_form_exprs]

    def describe(self) -> dict[str, Any]:
        """Plain-data view used by the `models` command and reports."""
        equations = {f"{s}'": eq for s, eq in zip(self.states, self.equations)}
        return {
            "name": self.name,
            "description": self.description,
            "dimension": self.dimension,
            "states": list(self.states),
            "params": dict(self.params),
            "epsilon_param": self.epsilon_param,
            "bifurcation_param": self.bifurcation_param,
            "equations": equations,
            "has_jacobian": self.has_jacobian,
            "has_normal_form": self.has_normal_form,
        }


def _check_model_invariants(model: SystemModel) -> None:
    where = f"model '{model.name}'"
    if not model.states:
        raise ConfigError(where, "at least one state is required")
    for label, names in (("state", model.states), ("parameter", tuple(model.params))):
        seen: set[str] = set()
        for name in names:
            if name in seen:
                raise ConfigError(where, f"duplicate {label} name '{name}'")
            seen.add(name)
    overlap = sorted(set(model.states) & set(model.params))
    if overlap:
        raise ConfigError(where, f"names used as both state and parameter: {', '.join(overlap)}")
    if model.epsilon_param not in model.params:
        raise ConfigError(where, f"epsilon_param '{model.epsilon_param}' is not a parameter")
    if model.bifurcation_param not in model.params:
        raise ConfigError(where, f"bifurcation_param '{model.bifurcation_param}' is not a parameter")
    if model.epsilon_param == model.bifurcation_param:
        raise ConfigError(where, "epsilon_param and bifurcation_param must differ")
    if len(model.rhs) != model.dimension:
        raise ConfigError(where, f"{len(model.rhs)} equations for {model.dimension} states")
    for key, value in model.params.items():
        if not math.isfinite(value):
            raise ConfigError(where, f"parameter '{key}' must be finite")

    declared = set(model.states) | set(model.params)
    for expr, text in zip(model.rhs, model.equations):
        undeclared = sorted(expr.identifiers() - declared)
        if undeclared:
            raise UnknownIdentifierError(undeclared[0], text)
    if model.jacobian_exprs is not None:
        if len(model.jacobian_exprs) != model.dimension or any(
            len(row) != model.dimension for row in model.jacobian_exprs
        ):
            raise ConfigError(where, "jacobian must be n x n")
    if model.normal_form_exprs is not None and len(model.normal_form_exprs) != 6:
        raise ConfigError(where, "normal_form needs exactly six expressions h1..h6")


# ============================================================================
# Config loading
# ============================================================================

@lru_cache(maxsize=1)
def _model_schema() -> dict[str, Any]:
    result = load_json(MODEL_SCHEMA_PATH)
    if isinstance(result, Failure):
        raise result.failure()
    return result.unwrap()  # type: ignore[no-any-return]


def model_from_mapping(
    config: Mapping[str, Any],
    native_rhs: NativeRhs | None = None,
    native_jacobian: NativeJacobian | None = None,
) -> SystemModel:
    """
    Build a SystemModel from an already-decoded config mapping.

    Raises:
        ConfigError: schema violation or inconsistent metadata
        ExpressionSyntaxError / UnknownIdentifierError: bad equation text
    """
    name = str(config.get("name", "<unnamed>")) if isinstance(config, Mapping) else "<unnamed>"
    try:
        jsonschema.validate(instance=dict(config), schema=_model_schema())
    except jsonschema.ValidationError as e:
        location = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"model '{name}' at {location}", e.message) from None

    states = tuple(config["states"])
    params = {k: float(v) for k, v in config["params"].items()}
    identifiers = frozenset(states) | frozenset(params)
    equations = tuple(config["equations"])
    if len(equations) != len(states):
        raise ConfigError(f"model '{name}'", f"{len(equations)} equations for {len(states)} states")

    rhs = tuple(parse_expression(eq, identifiers) for eq in equations)

    jacobian = None
    if "jacobian" in config:
        jacobian = tuple(
            tuple(parse_expression(entry, identifiers) for entry in row)
            for row in config["jacobian"]
        )
    normal_form = None
    if "normal_form" in config:
        normal_form = tuple(
            parse_expression(entry, NORMAL_FORM_IDENTIFIERS) for entry in config["normal_form"]
        )

    model = SystemModel(
        name=name,
        states=states,
        params=params,
        epsilon_param=config["epsilon_param"],
        bifurcation_param=config["bifurcation_param"],
        equations=equations,
        rhs=rhs,
        jacobian_exprs=jacobian,
        normal_form_exprs=normal_form,
        native_rhs=native_rhs,
        native_jacobian=native_jacobian,
        description=str(config.get("description", "")),
    )
    logger.debug("Model loaded", model=name, dimension=model.dimension)
    return model


def load_model(config_text: str) -> SystemModel:
    """Parse model config JSON text into a validated SystemModel."""
    try:
        config = json.loads(config_text)
    except json.JSONDecodeError as e:
        raise ConfigError("<model config>", f"invalid JSON: {e}") from None
    if not isinstance(config, dict):
        raise ConfigError("<model config>", "top level must be an object")
    return model_from_mapping(config)


def read_model_file(path: Path) -> Result[SystemModel, ConfigError]:
    """Load a model config file; every failure is reported as ConfigError."""
    if not path.exists():
        return Failure(ConfigError(path=str(path), reason="File not found"))
    try:
        return Success(load_model(path.read_text(encoding="utf-8")))
    except ConfigError as e:
        return Failure(ConfigError(path=str(path), reason=e.reason))
    except (ExpressionSyntaxError, UnknownIdentifierError, OSError) as e:
        return Failure(ConfigError(path=str(path), reason=str(e)))


# ============================================================================
# Built-in models
# ============================================================================

VDP_CONFIG: dict[str, Any] = {
    "name": "vdp",
    "description": "time-reversed van der Pol with canard point at the origin",
    "states": ["x", "y"],
    "params": {"lambda": 0.0, "eps": 0.05},
    "epsilon_param": "eps",
    "bifurcation_param": "lambda",
    "equations": ["x^2 + x^3/3 - y", "eps*(x - lambda)"],
    "jacobian": [["2*x + x^2", "-1"], ["eps", "0"]],
    "normal_form": ["1", "1 + x/3", "0", "1", "1", "0"],
}

FHN_CONFIG: dict[str, Any] = {
    "name": "fhn",
    "description": "FitzHugh-Nagumo travelling-wave system, wave speed s",
    "states": ["x1", "x2", "y"],
    "params": {"I": 0.05, "s": 1.37, "eps": 0.001},
    "epsilon_param": "eps",
    "bifurcation_param": "I",
    "equations": [
        "x2",
        "(s*x2 - x1*(x1-1)*(0.1-x1) + y - I)/5",
        "eps/s*(x1 - y)",
    ],
    "jacobian": [
        ["0", "1", "0"],
        ["(3*x1^2 - 2.2*x1 + 0.1)/5", "s/5", "1/5"],
        ["eps/s", "0", "-(eps/s)"],
    ],
}


def _vdp_rhs(z: Sequence[float], p: Bindings) -> list[float]:
    x, y = z[0], z[1]
    return [x ** 2 + x ** 3 / 3 - y, p["eps"] * (x - p["lambda"])]


def _vdp_jacobian(z: Sequence[float], p: Bindings) -> list[list[float]]:
    x = z[0]
    return [[2 * x + x ** 2, -1.0], [p["eps"], 0.0]]


def _fhn_rhs(z: Sequence[float], p: Bindings) -> list[float]:
    x1, x2, y = z[0], z[1], z[2]
    s, eps, current = p["s"], p["eps"], p["I"]
    return [
        x2,
        (s * x2 - x1 * (x1 - 1) * (0.1 - x1) + y - current) / 5,
        eps / s * (x1 - y),
    ]


def _fhn_jacobian(z: Sequence[float], p: Bindings) -> list[list[float]]:
    x1 = z[0]
    s, eps = p["s"], p["eps"]
    return [
        [0.0, 1.0, 0.0],
        [(3 * x1 ** 2 - 2.2 * x1 + 0.1) / 5, s / 5, 1 / 5],
        [eps / s, 0.0, -(eps / s)],
    ]


def builtin_vdp() -> SystemModel:
    """x' = x^2 + x^3/3 - y, y' = eps (x - lambda)."""
    return model_from_mapping(VDP_CONFIG, native_rhs=_vdp_rhs, native_jacobian=_vdp_jacobian)


def builtin_fhn() -> SystemModel:
    """FitzHugh-Nagumo in (x1, x2, y), bifurcation parameter I, s = 1.37."""
    return model_from_mapping(FHN_CONFIG, native_rhs=_fhn_rhs, native_jacobian=_fhn_jacobian)


BUILTIN_MODELS: dict[str, Callable[[], SystemModel]] = {
    "vdp": builtin_vdp,
    "fhn": builtin_fhn,
}


def get_builtin(name: str) -> SystemModel:
    try:
        return BUILTIN_MODELS[name]()
    except KeyError:
        raise ConfigError(
            "<builtin>", f"unknown model '{name}'; available: {', '.join(sorted(BUILTIN_MODELS))}"
        ) from None


def fhn_cubic(x1: float) -> float:
    """x1 (x1 - 1)(0.1 - x1), the FHN cubic nonlinearity."""
    return x1 * (x1 - 1) * (0.1 - x1)


def fhn_fold_points() -> tuple[float, float]:
    """Folds x1- < x1+ of the FHN critical manifold (roots of the cubic's derivative)."""
    # d/dx1 [x1 (x1-1)(0.1-x1)] = -3 x1^2 + 2.2 x1 - 0.1
    roots = np.sort(np.roots([-3.0, 2.2, -0.1]).real)
    return float(roots[0]), float(roots[1])


def critical_manifold_y(x1: float, current: float) -> float:
    """y on the FHN critical manifold {x2 = 0, y = x1 (x1-1)(0.1-x1) + I}."""
    return fhn_cubic(x1) + current


def vdp_critical_manifold_y(x: float) -> float:
    return x ** 2 + x ** 3 / 3
