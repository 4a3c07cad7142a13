from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ruamel.yaml import YAML

from krobust_mapf.errors import VariantError
from krobust_mapf.paths import VARIANTS_FILE

HEURISTICS = ("none", "cardinal-graph")
DEFAULT_TIME_LIMIT = 10.0
VARIANT_OPTIONS = ("heuristic", "rectangle", "corridor", "target")


@dataclass
class SolverConfig:
    """Configuration of one k-CBS run: heuristic and symmetry reasoning toggles."""

    name: str = "KCBS"
    k: int | None = None
    time_limit: float = DEFAULT_TIME_LIMIT
    rectangle: bool = False
    corridor: bool = False
    target: bool = False
    heuristic: str = "none"
    seed: int = 0
    options: dict[str, str | bool] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.time_limit <= 0:
            raise VariantError(f"time limit must be positive, got {self.time_limit}")
        if self.heuristic not in HEURISTICS:
            raise VariantError(
                f"unknown heuristic {self.heuristic!r}, expected one of {HEURISTICS}"
            )

    def get_display_name(self) -> str:
        """Get the display name with the run parameters.

        Examples:
            SolverConfig("KCBSH-RM") -> "KCBSH-RM (10s)"
            SolverConfig("KCBSH-RM", k=1, time_limit=0.5) -> "KCBSH-RM (k=1, 0.5s)"
        """
        limit = f"{self.time_limit:g}s"
        if self.k is None:
            return f"{self.name} ({limit})"
        return f"{self.name} (k={self.k}, {limit})"

    def get_base_filename(self) -> str:
        """Get a filesystem-friendly name for this configuration.

        Examples:
            SolverConfig("KCBSH-RM") -> "kcbsh-rm"
            SolverConfig("KCBSH-RM", k=2) -> "kcbsh-rm-k2"
        """
        base = self.name.lower()
        return base if self.k is None else f"{base}-k{self.k}"

    @property
    def reasoning(self) -> str:
        """Enabled symmetry reasoning, e.g. "RM+C+T", or "-" for none."""
        enabled = [
            flag
            for flag, on in (("RM", self.rectangle), ("C", self.corridor), ("T", self.target))
            if on
        ]
        return "+".join(enabled) or "-"

    def with_run(self, k: int, time_limit: float, seed: int = 0) -> "SolverConfig":
        return replace(self, k=k, time_limit=time_limit, seed=seed)


def _config_from_options(name: str, options: dict, source: str) -> SolverConfig:
    unknown = sorted(set(options) - set(VARIANT_OPTIONS))
    if unknown:
        raise VariantError(
            f"variant {name!r} in {source} has unknown options: {', '.join(unknown)}"
        )
    for flag in ("rectangle", "corridor", "target"):
        if flag in options and not isinstance(options[flag], bool):
            raise VariantError(f"variant {name!r}: {flag} must be true or false")
    known = {f.name for f in fields(SolverConfig)}
    kwargs = {key: value for key, value in options.items() if key in known}
    return SolverConfig(name=name, options=dict(options), **kwargs)


def load_variants(path: Path | None = None) -> dict[str, SolverConfig]:
    """Load solver variants from a YAML file, keyed by variant name.

    Args:
        path: Variants file; defaults to the one shipped with the package.

    Returns:
        Variant configurations in file order.

    Raises:
        VariantError: If the file is missing, malformed or has unknown options.
    """
    path = path or VARIANTS_FILE
    if not path.exists():
        raise VariantError(f"variants file '{path}' not found")
    yaml_obj = YAML()
    try:
        data = yaml_obj.load(path.read_text(encoding="utf-8"))
    except Exception as e:
        raise VariantError(f"could not read variants file {path.name}: {e}") from e
    if not isinstance(data, dict):
        raise VariantError(f"variants file {path.name} must map names to options")

    variants = {}
    for name, options in data.items():
        variants[str(name)] = _config_from_options(str(name), dict(options or {}), path.name)
    return variants


def get_variants(names: list[str], path: Path | None = None) -> list[SolverConfig]:
    """Look up variants by name, preserving the requested order."""
    variants = load_variants(path)
    missing = [name for name in names if name not in variants]
    if missing:
        raise VariantError(
            f"unknown variant(s) {', '.join(missing)}; "
            f"available: {', '.join(variants)}"
        )
    return [variants[name] for name in names]
