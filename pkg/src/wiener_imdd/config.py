"""Experiment configuration: nested YAML sections with unit-suffixed keys."""
from dataclasses import dataclass, field

import yaml

from .channel import LinkParams
from .errors import DomainError
from .sim import launch_power
from .wiener import VARIANTS

MIN_SYMBOLS = 10_000

# 4-PAM, 20 km operating points of the reference sweep
DEFAULT_SNR_GRID_DB = (
    -42.80, -37.80, -32.80, -27.80, -22.80, -17.80, -12.80, -7.80, -2.80, 2.20, 7.20, 12.20,
    17.20, 21.77, 26.28, 30.99, 35.82, 40.72, 45.67, 50.64, 55.62, 60.61, 65.60,
)

# (yaml key, LinkParams field)
_LINK_KEYS = (
    ("beta2_s2_per_km", "beta2"),
    ("alpha_per_km", "alpha"),
    ("gamma_per_w_km", "gamma_kerr"),
    ("length_km", "length"),
    ("baud_hz", "baud"),
    ("n_os", "n_os"),
)


@dataclass(frozen=True)
class ExperimentConfig:
    link: LinkParams = field(default_factory=LinkParams)
    pam_order: int = 4
    phi_max: float = 0.1
    p_tx_opt: float | None = None  # overrides the phase-rotation budget when set
    snr_grid_db: tuple = DEFAULT_SNR_GRID_DB
    filter_variants: tuple = ("matched", "mismatched", "naive")
    n_symbols: int = 100_000
    master_seed: int = 0
    truncation_rel: float = 0.01
    k_policy: str = "M"
    n_fft: int = 2**14

    def __post_init__(self):
        grid = tuple(float(x) for x in self.snr_grid_db)
        object.__setattr__(self, "snr_grid_db", grid)
        object.__setattr__(self, "filter_variants", tuple(self.filter_variants))
        if not grid:
            raise DomainError("snr_grid_db must not be empty")
        if any(b < a for a, b in zip(grid, grid[1:])):
            raise DomainError("snr_grid_db must be sorted ascending")
        if not self.filter_variants:
            raise DomainError("filter_variants must not be empty")
        bad = [v for v in self.filter_variants if v not in VARIANTS]
        if bad:
            raise DomainError(f"unknown filter variants {bad}; expected a subset of {list(VARIANTS)}")
        if int(self.pam_order) != self.pam_order or self.pam_order < 2:
            raise DomainError("pam_order must be an integer >= 2")
        if self.n_symbols < MIN_SYMBOLS:
            raise DomainError(f"n_symbols must be >= {MIN_SYMBOLS}")
        if self.p_tx_opt is not None and not self.p_tx_opt > 0:
            raise DomainError("p_tx_opt_w must be positive when given")
        self.resolve_k(1)

    def resolve_k(self, M: int) -> int:
        """Observation window length for a CIR of ``M`` taps."""
        pol = str(self.k_policy).strip()
        if pol == "M":
            return M
        try:
            k = int(pol)
        except ValueError:
            raise DomainError(f"k_policy must be 'M' or a positive integer, got {self.k_policy!r}") from None
        if k < 1:
            raise DomainError(f"k_policy must be 'M' or a positive integer, got {self.k_policy!r}")
        return k

    def launch_power_w(self) -> float:
        if self.p_tx_opt is not None:
            return float(self.p_tx_opt)
        return launch_power(self.link, self.phi_max).p_tx_opt

    def to_dict(self) -> dict:
        link = {key: getattr(self.link, attr) for key, attr in _LINK_KEYS}
        link = {k: (int(v) if k == "n_os" else float(v)) for k, v in link.items()}
        return {
            "link": link,
            "modulation": {
                "pam_order": int(self.pam_order),
                "phi_max_rad": float(self.phi_max),
                "p_tx_opt_w": None if self.p_tx_opt is None else float(self.p_tx_opt),
            },
            "sweep": {
                "snr_grid_db": list(self.snr_grid_db),
                "filter_variants": list(self.filter_variants),
                "n_symbols": int(self.n_symbols),
                "master_seed": int(self.master_seed),
            },
            "receiver": {
                "truncation_rel": float(self.truncation_rel),
                "k_policy": str(self.k_policy),
                "n_fft": int(self.n_fft),
            },
        }

    @classmethod
    def from_dict(cls, data) -> "ExperimentConfig":
        data = dict(data or {})
        sections = {"link", "modulation", "sweep", "receiver"}
        unknown = set(data) - sections
        if unknown:
            raise DomainError(f"unknown config sections {sorted(unknown)}")

        def section(name, keys):
            sec = dict(data.get(name) or {})
            extra = set(sec) - set(keys)
            if extra:
                raise DomainError(f"unknown keys in [{name}]: {sorted(extra)}")
            return sec

        link_in = section("link", [k for k, _ in _LINK_KEYS])
        link_kw = {}
        for key, attr in _LINK_KEYS:
            if key in link_in:
                # YAML 1.1 reads "27e9" as a string, hence the explicit casts
                link_kw[attr] = int(link_in[key]) if attr == "n_os" else float(link_in[key])
        mod = section("modulation", ["pam_order", "phi_max_rad", "p_tx_opt_w"])
        sw = section("sweep", ["snr_grid_db", "filter_variants", "n_symbols", "master_seed"])
        rx = section("receiver", ["truncation_rel", "k_policy", "n_fft"])

        kw = {"link": LinkParams(**link_kw)}
        if "pam_order" in mod:
            kw["pam_order"] = int(mod["pam_order"])
        if "phi_max_rad" in mod:
            kw["phi_max"] = float(mod["phi_max_rad"])
        if mod.get("p_tx_opt_w") is not None:
            kw["p_tx_opt"] = float(mod["p_tx_opt_w"])
        if "snr_grid_db" in sw:
            grid = sw["snr_grid_db"]
            kw["snr_grid_db"] = [float(x) for x in (grid if isinstance(grid, (list, tuple)) else [grid])]
        if "filter_variants" in sw:
            fv = sw["filter_variants"]
            kw["filter_variants"] = [str(v) for v in (fv if isinstance(fv, (list, tuple)) else [fv])]
        if "n_symbols" in sw:
            kw["n_symbols"] = int(float(sw["n_symbols"]))
        if "master_seed" in sw:
            kw["master_seed"] = int(sw["master_seed"])
        if "truncation_rel" in rx:
            kw["truncation_rel"] = float(rx["truncation_rel"])
        if "k_policy" in rx:
            kw["k_policy"] = str(rx["k_policy"])
        if "n_fft" in rx:
            kw["n_fft"] = int(rx["n_fft"])
        return cls(**kw)


def loads(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise DomainError(f"config is not valid YAML: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise DomainError("config must be a mapping of sections")
    return ExperimentConfig.from_dict(data)


def load(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def dumps(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None)
