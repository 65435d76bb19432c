"""Equi-area throughput and energy model for TALU-V against UMAC-V.

Published unit constants live in ``data/perf_constants.json``; the model
itself is a handful of closed-form rate formulas.  Every assumption that
the published numbers leave open is an explicit flag echoed in the report.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Dict, List, Optional

# split: every mul and add op costs its full latency in some lane.
# pipelined: the two-stage PC/SC pipeline overlaps the add stream with the
# multiply stream, so the longer stream bounds the kernel.
MAC_MODES = ("split", "pipelined")


class PerfConfigError(ValueError):
    pass


def _positive(name, value):
    if not isinstance(value, (int, float)) or isinstance(value, bool) or not value > 0:
        raise PerfConfigError(f"{name} must be a positive number, got {value!r}")
    return value


@dataclass(frozen=True)
class UnitMetrics:
    name: str
    frequency_hz: float
    area_mm2: float
    power_mw: float
    delay_ns: Dict[str, float] = field(default_factory=dict)
    pdp_pj: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for attr in ("frequency_hz", "area_mm2", "power_mw"):
            _positive(f"{self.name}.{attr}", getattr(self, attr))

    @property
    def power_density(self) -> float:
        return self.power_mw / self.area_mm2

    @property
    def mean_pdp(self) -> float:
        return sum(self.pdp_pj.values()) / len(self.pdp_pj)


@dataclass(frozen=True)
class UmacRateModel:
    outputs_per_cycle: Dict[int, int]
    pipeline_depth: int
    units: int
    frequency_hz: float

    def rate(self, bitwidth: int) -> int:
        try:
            return self.outputs_per_cycle[bitwidth]
        except KeyError:
            raise PerfConfigError(f"UMAC has no rate for {bitwidth}-bit data") from None


@dataclass(frozen=True)
class Constants:
    raw: dict

    def unit(self, name: str, bits: str = "32") -> UnitMetrics:
        try:
            u = self.raw["units"][name]
        except KeyError:
            raise PerfConfigError(f"unknown unit {name!r}") from None

        def pick(v):
            return v[bits] if isinstance(v, dict) else v
        return UnitMetrics(name, u["frequency_hz"], pick(u["area_mm2"]), pick(u["power_mw"]),
                           dict(u.get("delay_ns", {})), dict(u.get("pdp_pj", {})))

    def cycles(self, fmt: str) -> dict:
        try:
            return self.raw["talu_cycles"][fmt]
        except KeyError:
            raise PerfConfigError(f"no TALU cycle entry for format {fmt!r}") from None

    @property
    def targets(self) -> dict:
        return self.raw["targets"]


def load_constants(path=None) -> Constants:
    if path is None:
        text = resources.files("talu.data").joinpath("perf_constants.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return Constants(json.loads(text))


@dataclass(frozen=True)
class ArchConfig:
    arch: str  # talu_v or umac_v
    unit: str
    count: int  # lanes or units
    format: str = "p8e2"
    bitwidth: int = 8


@dataclass(frozen=True)
class KernelShape:
    rows: int = 3
    cols: int = 3
    inner: int = 3

    @property
    def muls(self) -> int:
        return self.rows * self.cols * self.inner

    @property
    def adds(self) -> int:
        return self.rows * self.cols * (self.inner - 1)


@dataclass(frozen=True)
class Assumptions:
    mac_mode: str = "pipelined"
    decode_amortized: bool = True

    def __post_init__(self):
        if self.mac_mode not in MAC_MODES:
            raise PerfConfigError(f"mac_mode must be one of {MAC_MODES}, got {self.mac_mode!r}")
        if not isinstance(self.decode_amortized, bool):
            raise PerfConfigError("decode_amortized must be true or false")


@dataclass(frozen=True)
class PerfConfig:
    subject: ArchConfig
    baseline: ArchConfig
    kernel: KernelShape = KernelShape()
    assumptions: Assumptions = Assumptions()
    equi_area_tolerance: float = 0.10
    equi_area_override: bool = False


def _arch(d: dict, role: str) -> ArchConfig:
    if not isinstance(d, dict):
        raise PerfConfigError(f"{role} must be an object")
    arch = d.get("arch")
    if arch not in ("talu_v", "umac_v"):
        raise PerfConfigError(f"{role}.arch must be talu_v or umac_v, got {arch!r}")
    count_key = "lanes" if arch == "talu_v" else "units"
    count = d.get(count_key)
    if not isinstance(count, int) or isinstance(count, bool) or count < 0:
        raise PerfConfigError(f"{role}.{count_key} must be a non-negative integer")
    unit = d.get("unit", "TALU" if arch == "talu_v" else "UMAC")
    fmt = d.get("format", "p8e2")
    bitwidth = d.get("bitwidth", 8)
    extra = set(d) - {"arch", "unit", count_key, "format", "bitwidth"}
    if extra:
        raise PerfConfigError(f"{role}: unknown keys {sorted(extra)}")
    return ArchConfig(arch, unit, count, fmt, bitwidth)


def config_from_dict(d: dict) -> PerfConfig:
    if not isinstance(d, dict):
        raise PerfConfigError("config must be a JSON object")
    allowed = {"subject", "baseline", "kernel", "assumptions", "equi_area_tolerance", "equi_area_override"}
    extra = set(d) - allowed
    if extra:
        raise PerfConfigError(f"unknown config keys {sorted(extra)}")
    for key in ("subject", "baseline"):
        if key not in d:
            raise PerfConfigError(f"missing {key!r}")
    k = d.get("kernel", {})
    try:
        kernel = KernelShape(int(k.get("rows", 3)), int(k.get("cols", 3)), int(k.get("inner", 3)))
        assumptions = Assumptions(**d.get("assumptions", {}))
    except TypeError as exc:
        raise PerfConfigError(str(exc)) from None
    if min(kernel.rows, kernel.cols, kernel.inner) <= 0:
        raise PerfConfigError("kernel dimensions must be positive")
    tol = d.get("equi_area_tolerance", 0.10)
    _positive("equi_area_tolerance", tol)
    override = d.get("equi_area_override", False)
    if not isinstance(override, bool):
        raise PerfConfigError("equi_area_override must be true or false")
    return PerfConfig(_arch(d["subject"], "subject"), _arch(d["baseline"], "baseline"),
                      kernel, assumptions, tol, override)


def load_config(path=None) -> PerfConfig:
    if path is None:
        text = resources.files("talu.data").joinpath("perf_default.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PerfConfigError(f"invalid JSON: {exc}") from None
    return config_from_dict(data)


# ------------------------------------------------------------------ rates

@dataclass
class Rates:
    arch: str
    kernels_per_s: float
    kernels_per_j: float
    power_w: float
    area_mm2: float
    components: dict


def talu_v_rates(arch: ArchConfig, kernel: KernelShape, assumptions: Assumptions,
                 constants: Constants) -> Rates:
    if arch.count <= 0:
        raise PerfConfigError("TALU-V needs at least one lane")
    unit = constants.unit(arch.unit)
    cyc = constants.cycles(arch.format)
    mul, add = cyc["mul"], cyc["add"]
    # both operands decode per op: together for 8-bit words, one after the other for 16-bit
    pair_decode = cyc["decode"] * (1 if arch.format.startswith("p8") else 2)
    if not assumptions.decode_amortized:
        mul += pair_decode
        add += pair_decode
    if assumptions.mac_mode == "split":
        lane_cycles = kernel.muls * mul + kernel.adds * add
    else:
        lane_cycles = max(kernel.muls * mul, kernel.adds * add)
    kps = arch.count * unit.frequency_hz / lane_cycles
    power_w = arch.count * unit.power_mw * 1e-3
    return Rates(arch.arch, kps, kps / power_w, power_w, arch.count * unit.area_mm2, {
        "lanes": arch.count,
        "frequency_hz": unit.frequency_hz,
        "mul_cycles": mul,
        "add_cycles": add,
        "mac_latency_cycles": cyc["mul"] + cyc["add"],
        "pair_decode_cycles": pair_decode,
        "muls_per_kernel": kernel.muls,
        "adds_per_kernel": kernel.adds,
        "lane_cycles_per_kernel": lane_cycles,
        "power_per_unit_mw": unit.power_mw,
    })


def umac_rate_model(arch: ArchConfig, constants: Constants) -> UmacRateModel:
    u = constants.raw["units"][arch.unit]
    return UmacRateModel({int(k): v for k, v in u["outputs_per_cycle"].items()},
                         u["pipeline_depth"], arch.count, u["frequency_hz"])


def umac_v_rates(arch: ArchConfig, kernel: KernelShape, constants: Constants) -> Rates:
    if arch.count <= 0:
        raise PerfConfigError("UMAC-V needs at least one unit")
    if arch.bitwidth not in (8, 16, 32):
        raise PerfConfigError(f"UMAC bitwidth must be 8, 16 or 32, got {arch.bitwidth}")
    unit = constants.unit(arch.unit)
    model = umac_rate_model(arch, constants)
    macs_per_s = model.units * model.rate(arch.bitwidth) * model.frequency_hz
    kps = macs_per_s / kernel.muls
    power_w = arch.count * unit.power_mw * 1e-3
    return Rates(arch.arch, kps, kps / power_w, power_w, arch.count * unit.area_mm2, {
        "units": arch.count,
        "frequency_hz": model.frequency_hz,
        "outputs_per_cycle": model.rate(arch.bitwidth),
        "pipeline_depth": model.pipeline_depth,
        "macs_per_s": macs_per_s,
        "macs_per_kernel": kernel.muls,
        "power_per_unit_mw": unit.power_mw,
    })


def arch_rates(arch: ArchConfig, config: PerfConfig, constants: Constants) -> Rates:
    if arch.arch == "talu_v":
        return talu_v_rates(arch, config.kernel, config.assumptions, constants)
    return umac_v_rates(arch, config.kernel, constants)


@dataclass
class PerfReport:
    subject: Rates
    baseline: Rates
    throughput_ratio: float
    energy_efficiency_ratio: float
    targets: dict
    deviation_pct: dict
    area_ratio: float
    equi_area_ok: bool
    config: dict
    constants: dict  # every published number the ratios were computed from

    def to_dict(self) -> dict:
        return asdict(self)


def equi_area_report(config: PerfConfig, constants: Optional[Constants] = None) -> PerfReport:
    constants = constants or load_constants()
    s = arch_rates(config.subject, config, constants)
    b = arch_rates(config.baseline, config, constants)
    area_ratio = s.area_mm2 / b.area_mm2
    ok = abs(area_ratio - 1) <= config.equi_area_tolerance
    if not ok and not config.equi_area_override:
        raise PerfConfigError(
            f"areas differ by {100 * (area_ratio - 1):+.1f}% (tolerance {100 * config.equi_area_tolerance:.0f}%);"
            " set equi_area_override to compare anyway")
    tput = s.kernels_per_s / b.kernels_per_s
    energy = s.kernels_per_j / b.kernels_per_j
    targets = dict(constants.targets)
    deviation = {
        "throughput_ratio": 100 * (tput / targets["throughput_ratio"] - 1),
        "energy_efficiency_ratio": 100 * (energy / targets["energy_efficiency_ratio"] - 1),
    }
    used = {"units": {a.unit: constants.raw["units"][a.unit] for a in (config.subject, config.baseline)},
            "talu_cycles": {a.format: constants.cycles(a.format)
                            for a in (config.subject, config.baseline) if a.arch == "talu_v"}}
    return PerfReport(s, b, tput, energy, targets, deviation, area_ratio, ok, asdict(config), used)


def report_json(report: PerfReport) -> str:
    return json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"


def report_text(report: PerfReport) -> str:
    s, b = report.subject, report.baseline
    a = report.config["assumptions"]
    lines = [
        f"assumptions: mac_mode={a['mac_mode']} decode_amortized={str(a['decode_amortized']).lower()}",
        f"{'':24s}{s.arch:>14s}{b.arch:>14s}",
        f"{'kernels/s':24s}{s.kernels_per_s:14.4e}{b.kernels_per_s:14.4e}",
        f"{'kernels/J':24s}{s.kernels_per_j:14.4e}{b.kernels_per_j:14.4e}",
        f"{'power (W)':24s}{s.power_w:14.5f}{b.power_w:14.5f}",
        f"{'area (mm2)':24s}{s.area_mm2:14.5f}{b.area_mm2:14.5f}",
        "",
        f"{'ratio':24s}{'model':>10s}{'target':>10s}{'dev %':>10s}",
    ]
    for key, label in (("throughput_ratio", "throughput"), ("energy_efficiency_ratio", "energy efficiency")):
        val = getattr(report, key)
        lines.append(f"{label:24s}{val:10.4f}{report.targets[key]:10.2f}{report.deviation_pct[key]:+10.2f}")
    lines.append(f"{'area (subject/baseline)':24s}{report.area_ratio:10.4f}")
    if "mac_latency_cycles" in s.components:
        lines.append(f"TALU MAC latency (mul+add): {s.components['mac_latency_cycles']} cycles")
    return "\n".join(lines) + "\n"


def assumption_sweep(config: PerfConfig, constants: Optional[Constants] = None) -> List[PerfReport]:
    """The report under every assumption combination."""
    out = []
    for mode in MAC_MODES:
        for amort in (True, False):
            cfg = PerfConfig(config.subject, config.baseline, config.kernel, Assumptions(mode, amort),
                             config.equi_area_tolerance, config.equi_area_override)
            out.append(equi_area_report(cfg, constants))
    return out


# ---------------------------------------------------------- static tables

@dataclass
class RatioRow:
    metric: str
    computed: float
    printed: float

    @property
    def deviation_pct(self) -> float:
        return 100 * (self.computed / self.printed - 1)


def comparison_table(constants: Optional[Constants] = None) -> dict:
    """Unit metrics plus the UMAC/TALU and posit-only/TALU ratio annotations."""
    constants = constants or load_constants()
    talu, umac = constants.unit("TALU"), constants.unit("UMAC")
    printed = constants.raw["printed_ratios"]
    ratios = [
        RatioRow("area", umac.area_mm2 / talu.area_mm2, printed["area"]),
        RatioRow("power", umac.power_mw / talu.power_mw, printed["power"]),
        RatioRow("pdp", umac.mean_pdp / talu.mean_pdp, printed["pdp"]),
        RatioRow("power_density", umac.power_density / talu.power_density, printed["power_density"]),
    ]
    units = []
    for name, u in constants.raw["units"].items():
        for bits in ("8", "16", "32"):
            m = constants.unit(name, bits)
            units.append({
                "unit": name, "bits": int(bits), "delay_ns": m.delay_ns[bits], "area_mm2": m.area_mm2,
                "power_mw": m.power_mw, "pdp_pj": m.pdp_pj[bits],
                "power_density": m.power_density,
                "printed_power_density": u["printed_power_density"][bits]
                if isinstance(u["printed_power_density"], dict) else u["printed_power_density"],
            })
    posit_only = {}
    for metric, attr in (("area", "area_mm2"), ("power", "power_mw"), ("power_density", "power_density")):
        vals = [getattr(constants.unit(n, "32"), attr) / getattr(talu, attr) for n in ("VMULT", "DFMA", "FusedMAC")]
        posit_only[metric] = {"computed": [min(vals), max(vals)],
                              "printed": printed["posit_only_32bit"][metric]}
    return {"units": units, "ratios": [asdict(r) | {"deviation_pct": r.deviation_pct} for r in ratios],
            "posit_only_32bit": posit_only,
            "printed_umac_power_density_ratio": umac_printed_density_ratio(constants)}


def umac_printed_density_ratio(constants: Constants) -> float:
    u, t = constants.raw["units"]["UMAC"], constants.raw["units"]["TALU"]
    return u["printed_power_density"] / t["printed_power_density"]


def comparison_text(table: dict) -> str:
    lines = [f"{'unit':10s}{'bits':>5s}{'delay ns':>10s}{'area mm2':>10s}{'power mW':>10s}"
             f"{'PDP pJ':>9s}{'mW/mm2':>10s}{'printed':>10s}"]
    for r in table["units"]:
        lines.append(f"{r['unit']:10s}{r['bits']:5d}{r['delay_ns']:10.2f}{r['area_mm2']:10.4f}"
                     f"{r['power_mw']:10.2f}{r['pdp_pj']:9.2f}{r['power_density']:10.2f}"
                     f"{r['printed_power_density']:10.2f}")
    lines += ["", f"{'UMAC/TALU':16s}{'computed':>10s}{'printed':>10s}{'dev %':>9s}"]
    for r in table["ratios"]:
        lines.append(f"{r['metric']:16s}{r['computed']:10.3f}{r['printed']:10.2f}{r['deviation_pct']:+9.2f}")
    lines.append(f"(printed power densities give {table['printed_umac_power_density_ratio']:.3f})")
    lines += ["", "posit-only units / TALU at 32 bits (min..max)"]
    for metric, d in table["posit_only_32bit"].items():
        lo, hi = d["computed"]
        plo, phi = d["printed"]
        lines.append(f"{metric:16s}{lo:8.2f} .. {hi:<8.2f} printed {plo} .. {phi}")
    return "\n".join(lines) + "\n"


def isclose_rel(a: float, b: float, rel: float) -> bool:
    return math.isclose(a, b, rel_tol=rel)
