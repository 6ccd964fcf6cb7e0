"""End-to-end embedding runs and their flat ``key=value`` configuration."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields
from typing import Optional

from .encode import encode_method1, encode_method2
from .errors import ParameterError, ParseError
from .graph import (
    COMBINATORIAL,
    NORMALIZED,
    Laplacian,
    SparseGraph,
    SpectrumBound,
    build_knn_graph,
    build_laplacian,
    check_points,
    estimate_lambda_max,
)
from .optimize import Embedding, OptimizerConfig, optimize
from .sgw import DEFAULT_BANDS, DEFAULT_ORDER, FilterBank, SgwTensor, design_filter_bank, sgw_transform_all


@dataclass(frozen=True)
class RunConfig:
    # the first three keys double as the provenance line of every output
    seed: int = 0
    method: int = 2
    epochs: int = OptimizerConfig.epochs
    k_neighbors: int = 15
    n_bands: int = DEFAULT_BANDS
    cheb_order: int = DEFAULT_ORDER
    laplacian_kind: str = COMBINATORIAL
    sampler_kind: str = OptimizerConfig.sampler_kind
    negative_kind: str = OptimizerConfig.negative_kind
    initial_lr: float = OptimizerConfig.initial_lr
    negatives_per_positive: int = OptimizerConfig.negatives_per_positive
    min_dist_eps: float = OptimizerConfig.min_dist_eps
    clip: float = OptimizerConfig.clip
    deterministic: bool = False

    def __post_init__(self):
        if self.method not in (1, 2):
            raise ParameterError(f"method must be 1 or 2, got {self.method}")
        if self.k_neighbors < 1:
            raise ParameterError("k_neighbors must be >= 1")
        if self.n_bands < 2:
            raise ParameterError("n_bands must be >= 2")
        if self.cheb_order < 3:
            raise ParameterError("cheb_order must be >= 3")
        if self.laplacian_kind not in (COMBINATORIAL, NORMALIZED):
            raise ParameterError(f"unknown laplacian_kind {self.laplacian_kind!r}")
        self.optimizer()  # validates the remaining fields

    def optimizer(self) -> OptimizerConfig:
        return OptimizerConfig(
            epochs=self.epochs, initial_lr=self.initial_lr, negatives_per_positive=self.negatives_per_positive,
            min_dist_eps=self.min_dist_eps, clip=self.clip, seed=self.seed, sampler_kind=self.sampler_kind,
            negative_kind=self.negative_kind, deterministic=self.deterministic,
        )

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})

    def items(self):
        return [(f.name, getattr(self, f.name)) for f in fields(self)]

    def to_header(self) -> str:
        return "# " + ", ".join(f"{k}={_format(v)}" for k, v in self.items())

    @classmethod
    def from_mapping(cls, values: dict, base: Optional["RunConfig"] = None) -> "RunConfig":
        base = base or cls()
        types = {f.name: type(getattr(base, f.name)) for f in fields(cls)}
        parsed = {}
        for key, raw in values.items():
            if key not in types:
                raise ParameterError(f"unknown config key {key!r}")
            parsed[key] = _coerce(key, raw, types[key])
        return dataclasses.replace(base, **parsed)

    @classmethod
    def from_header(cls, line: str) -> "RunConfig":
        body = line.strip()
        if not body.startswith("#"):
            raise ParseError("config header must start with '#'")
        pairs = {}
        for item in body[1:].split(","):
            if not item.strip():
                continue
            if "=" not in item:
                raise ParseError(f"malformed header item {item.strip()!r}")
            k, v = item.split("=", 1)
            pairs[k.strip()] = v.strip()
        return cls.from_mapping(pairs)


def _format(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _coerce(key, raw, typ):
    if not isinstance(raw, str):
        return typ(raw)
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return typ(raw)
    except ValueError as exc:
        raise ParameterError(f"config key {key}: cannot read {raw!r} as {typ.__name__}") from exc


def read_config_file(path) -> dict:
    """Flat ``key=value`` lines; blank lines and ``#`` comments are ignored."""
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError(f"{path}:{num}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


@dataclass(frozen=True)
class PipelineResult:
    config: RunConfig
    graph: SparseGraph
    laplacian: Laplacian
    spectrum: SpectrumBound
    bank: FilterBank
    tensor: SgwTensor
    encoded: object  # EncodedMethod1 | EncodedMethod2
    embedding: Embedding


def build_tensor(points, cfg: RunConfig):
    """Graph, Laplacian, spectrum bound, filter bank and SGW tensor for ``points``."""
    x = check_points(points)
    graph = build_knn_graph(x, k=cfg.k_neighbors)
    lap = build_laplacian(graph, cfg.laplacian_kind)
    spectrum = estimate_lambda_max(lap, seed=cfg.seed)
    bank = design_filter_bank(spectrum.lambda_max, cfg.n_bands)
    tensor = sgw_transform_all(x, lap, bank, cfg.cheb_order)
    return graph, lap, spectrum, bank, tensor


def run_embedding(points, cfg: RunConfig = RunConfig(), feature_names=None) -> PipelineResult:
    """kNN graph, Laplacian, SGW tensor, encoding and contrastive optimization."""
    graph, lap, spectrum, bank, tensor = build_tensor(points, cfg)
    if cfg.method == 1:
        encoded = encode_method1(tensor, feature_names)
    else:
        encoded = encode_method2(tensor, feature_names)
    emb = optimize(encoded, graph, cfg.optimizer())
    emb.provenance["config"] = cfg.to_header()[2:]
    return PipelineResult(cfg, graph, lap, spectrum, bank, tensor, encoded, emb)


def embed(points, **overrides) -> Embedding:
    """Shorthand: ``run_embedding(points, RunConfig(**overrides)).embedding``."""
    return run_embedding(points, RunConfig(**overrides)).embedding


__all__ = [
    "RunConfig", "PipelineResult", "read_config_file", "build_tensor", "run_embedding", "embed",
]
