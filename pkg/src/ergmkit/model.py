"""Model parameters: the coefficient vector and its template graphs.

The Hamiltonian is sum_i n^2 * beta[i] * t(G_i, X) where G_0 is always the
single edge and G_1..G_K are the interaction templates. Interaction
coefficients must be nonnegative; the edge coefficient is free.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .templates import EDGE, TemplateGraph, make_template


@dataclass(frozen=True)
class ModelParams:
    beta: tuple[float, ...]
    templates: tuple[TemplateGraph, ...]  # G_1..G_K; the edge G_0 is implied
    n: int = 0  # intended chain size; landscape analysis ignores it

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        object.__setattr__(self, "beta", beta)
        templates = tuple(make_template(t) for t in self.templates)
        object.__setattr__(self, "templates", templates)
        if len(beta) != len(templates) + 1:
            raise ValueError(
                f"beta has {len(beta)} entries but there are {len(templates)} "
                "interaction templates (the edge term is index 0)"
            )
        for i, b in enumerate(beta[1:], start=1):
            if b < 0:
                raise ValueError(f"interaction coefficient beta[{i}] must be >= 0")
        for t in templates:
            if t.edge_count < 1:
                raise ValueError("templates must have at least one edge")
        if self.n < 0:
            raise ValueError("n must be nonnegative")

    @property
    def K(self) -> int:
        return len(self.templates)

    def all_templates(self) -> tuple[TemplateGraph, ...]:
        """G_0..G_K with the single edge at index 0."""
        return (EDGE,) + self.templates

    def edge_counts(self) -> tuple[int, ...]:
        return tuple(t.edge_count for t in self.all_templates())

    def max_template_vertices(self) -> int:
        return max(t.k for t in self.all_templates())


def triangle_model(beta0: float, beta1: float, n: int = 0) -> ModelParams:
    return ModelParams((beta0, beta1), (make_template("triangle"),), n=n)


def edge_model(beta0: float, n: int = 0) -> ModelParams:
    return ModelParams((beta0,), (), n=n)
