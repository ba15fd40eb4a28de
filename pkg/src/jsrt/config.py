from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigError

CART = "CART"
P_JSRT = "P-JSRT"
C_JSRT = "C-JSRT"
CP_JSRT = "CP-JSRT"
KNNRT = "KNNRT"
KRT = "KRT"

TREE_METHODS = (CART, P_JSRT, C_JSRT, CP_JSRT)
ALL_METHODS = (CART, P_JSRT, C_JSRT, CP_JSRT, KNNRT, KRT)
JS_METHODS = (P_JSRT, C_JSRT, CP_JSRT)


@dataclass(frozen=True)
class JsConfig:
    """Parameters of the positive-part James-Stein estimator.

    ``lam`` scales the shrink weight (1.0 gives the plain estimator),
    ``variance_floor`` replaces zero leaf variances, and ``min_groups_js``
    is the smallest number of groups the estimator accepts.
    """

    lam: float = 1.0
    variance_floor: float = 1e-12
    min_groups_js: int = 4

    def __post_init__(self):
        if not self.lam >= 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if not self.variance_floor > 0:
            raise ConfigError("variance_floor must be > 0")
        if self.min_groups_js < 4:
            raise ConfigError("min_groups_js must be >= 4")

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "variance_floor": self.variance_floor,
            "min_groups_js": self.min_groups_js,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JsConfig":
        return cls(
            lam=float(d.get("lambda", 1.0)),
            variance_floor=float(d.get("variance_floor", 1e-12)),
            min_groups_js=int(d.get("min_groups_js", 4)),
        )


@dataclass(frozen=True)
class InductionConfig:
    """Tree growing configuration.

    ``min_leaf`` is raised to 2 when configured lower so that every leaf has
    an unbiased variance. JS methods get a default :class:`JsConfig` when
    none is given.
    """

    min_split: int = 20
    min_leaf: int = 5
    method: str = CART
    js: JsConfig | None = field(default=None)

    def __post_init__(self):
        if self.method not in TREE_METHODS:
            raise ConfigError(f"unknown tree method {self.method!r}")
        if self.min_split < 2:
            raise ConfigError("min_split must be >= 2")
        if self.min_leaf < 2:
            object.__setattr__(self, "min_leaf", 2)
        if self.method in JS_METHODS and self.js is None:
            object.__setattr__(self, "js", JsConfig())
        if self.method == CART and self.js is not None:
            raise ConfigError("CART takes no JS configuration")

    def to_dict(self) -> dict:
        return {
            "min_split": self.min_split,
            "min_leaf": self.min_leaf,
            "method": self.method,
            "js": None if self.js is None else self.js.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InductionConfig":
        js = d.get("js")
        return cls(
            min_split=int(d["min_split"]),
            min_leaf=int(d["min_leaf"]),
            method=d["method"],
            js=None if js is None else JsConfig.from_dict(js),
        )
