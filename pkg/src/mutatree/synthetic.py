"""Synthetic EMBER-style corpus generator.

Numeric features are drawn per class from distributions moment-matched to
published per-class marginal statistics (mean, std, min, max). A truncated
normal is used whenever that family can realize the target moments on the
given support; the heavy-tailed count/size features (std well above the
mean, hard floor at zero) are out of its reach, so those fall back to a
moment-matched lognormal clipped to the support. Categorical fields and
import lists follow documented class-conditional choices; in particular a
fixed set of 14 function names occurs only in benign samples, which gives
the import-function mutation a meaningful candidate pool.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import truncnorm

from .records import Label, SampleRecord


@dataclass(frozen=True)
class Marginal:
    mean: float
    std: float
    lo: float
    hi: float
    integer: bool = True


# (malicious, benign) per numeric feature, in canonical feature order.
CLASS_MARGINALS: dict[str, tuple[Marginal, Marginal]] = {
    "strings_entropy": (
        Marginal(5.967, 0.615, 0.0, 6.584, integer=False),
        Marginal(5.595, 0.659, 0.0, 6.585, integer=False),
    ),
    "num_strings": (
        Marginal(6.12e3, 1.67e4, 0, 1.63e6),
        Marginal(8.26e3, 3.37e4, 0, 2.48e6),
    ),
    "file_size": (
        Marginal(1.24e6, 2.39e6, 512, 2.71e8),
        Marginal(1.71e6, 6.93e6, 234, 5.36e8),
    ),
    "num_exports": (
        Marginal(9.019, 166.313, 0, 5.26e4),
        Marginal(51.877, 625.764, 0, 52628),
    ),
    "num_imports": (
        Marginal(98.993, 140.209, 0, 3074),
        Marginal(113.456, 286.144, 0, 21344),
    ),
    "timestamp": (
        Marginal(1358407000, 416879700, 0, 4294967000),
        Marginal(1332756000, 574590400, 0, 4294967000),
    ),
    "size_of_code": (
        Marginal(2.75e6, 7.10e7, 0, 4.29e9),
        Marginal(5.92e5, 4.17e6, 0, 1.67e9),
    ),
    "num_sections": (
        Marginal(5.088, 3.229, 1, 97),
        Marginal(4.854, 2.639, 0, 198),
    ),
}

P_HAS_SIGNATURE = {Label.BENIGN: 0.35, Label.MALICIOUS: 0.05}
P_HAS_DEBUG = {Label.BENIGN: 0.5, Label.MALICIOUS: 0.3}

_LIBRARIES = (
    "kernel32.dll",
    "user32.dll",
    "advapi32.dll",
    "gdi32.dll",
    "shell32.dll",
    "ole32.dll",
    "ws2_32.dll",
    "msvcrt.dll",
    "ntdll.dll",
    "wininet.dll",
)

_FUNCTION_STEMS = (
    "CreateFileW", "ReadFile", "WriteFile", "CloseHandle", "GetLastError",
    "LoadLibraryA", "GetProcAddress", "VirtualAlloc", "ExitProcess", "Sleep",
    "GetModuleHandleW", "GetTickCount", "HeapAlloc", "HeapFree", "SetFilePointer",
    "MultiByteToWideChar", "WideCharToMultiByte", "GetCurrentProcess",
    "FormatMessageW", "LocalFree",
)

# 200 qualified names: every library paired with every function stem.
IMPORT_POOL: tuple[str, ...] = tuple(
    f"{lib}:{stem}" for lib in _LIBRARIES for stem in _FUNCTION_STEMS
)

# Names drawn only for benign samples (and with higher weight there), so the
# benign-common / malware-absent candidate derivation finds exactly these 14.
BENIGN_ONLY_FUNCTIONS: tuple[str, ...] = (
    "kernel32.dll:FormatMessageW",
    "kernel32.dll:LocalFree",
    "user32.dll:MultiByteToWideChar",
    "user32.dll:WideCharToMultiByte",
    "advapi32.dll:GetCurrentProcess",
    "gdi32.dll:SetFilePointer",
    "shell32.dll:GetTickCount",
    "shell32.dll:HeapFree",
    "ole32.dll:GetModuleHandleW",
    "ws2_32.dll:LocalFree",
    "msvcrt.dll:FormatMessageW",
    "ntdll.dll:WideCharToMultiByte",
    "wininet.dll:GetCurrentProcess",
    "wininet.dll:SetFilePointer",
)

_BENIGN_ONLY_WEIGHT = 4.0

_fit_cache: dict[tuple[float, float, float, float], tuple[str, float, float]] = {}


def _fit_numeric_sampler(m: Marginal) -> tuple[str, float, float]:
    """Resolve (family, mu, sigma) whose draws on [lo, hi] match m's moments."""
    key = (m.mean, m.std, m.lo, m.hi)
    if key in _fit_cache:
        return _fit_cache[key]

    def residual(params: np.ndarray) -> list[float]:
        mu, log_sigma = params
        sigma = math.exp(log_sigma)
        a, b = (m.lo - mu) / sigma, (m.hi - mu) / sigma
        mean, var = truncnorm.stats(a, b, loc=mu, scale=sigma, moments="mv")
        return [float(mean) - m.mean, math.sqrt(float(var)) - m.std]

    sol, _, ier, _ = optimize.fsolve(
        residual, [m.mean, math.log(m.std)], full_output=True
    )
    fit: tuple[str, float, float] | None = None
    if ier == 1:
        mu, sigma = float(sol[0]), math.exp(float(sol[1]))
        err = residual(np.array([mu, math.log(sigma)]))
        scale = max(abs(m.mean), m.std, 1.0)
        if abs(err[0]) < 1e-4 * scale and abs(err[1]) < 1e-4 * scale:
            fit = ("truncnorm", mu, sigma)
    if fit is None:
        # Lognormal with matching first two moments; support starts at 0 so
        # the [lo, hi] clip is a negligible perturbation for these features.
        sigma2 = math.log(1.0 + (m.std / m.mean) ** 2)
        mu = math.log(m.mean) - sigma2 / 2.0
        fit = ("lognormal", mu, math.sqrt(sigma2))
    _fit_cache[key] = fit
    return fit


def _draw_numeric(m: Marginal, n: int, rng: np.random.Generator) -> np.ndarray:
    family, mu, sigma = _fit_numeric_sampler(m)
    if family == "truncnorm":
        a, b = (m.lo - mu) / sigma, (m.hi - mu) / sigma
        values = truncnorm.ppf(rng.uniform(size=n), a, b, loc=mu, scale=sigma)
    else:
        values = rng.lognormal(mean=mu, sigma=sigma, size=n)
    values = np.clip(values, m.lo, m.hi)
    if m.integer:
        values = np.clip(np.rint(values), m.lo, m.hi)
    return values


def _entry_sections(rng: np.random.Generator) -> tuple[list[str], np.ndarray]:
    fixed = [".text", ".code", ".init"]
    letters = np.array(list(string.ascii_lowercase))
    random_names = [
        "." + "".join(rng.choice(letters, size=4)) for _ in range(5)
    ]
    names = fixed + random_names
    probs = np.array([0.9] + [0.1 / 7.0] * 7)
    return names, probs / probs.sum()


def generate_synthetic(count_per_class: int, seed: int) -> list[SampleRecord]:
    """Deterministic synthetic corpus: count_per_class malicious followed by
    count_per_class benign records.
    """
    if count_per_class < 1:
        raise ValueError("count_per_class must be >= 1")
    rng = np.random.default_rng(seed)
    entry_names, entry_probs = _entry_sections(rng)
    pool = np.array(IMPORT_POOL)
    benign_only = frozenset(BENIGN_ONLY_FUNCTIONS)
    weights = {}
    for label in (Label.MALICIOUS, Label.BENIGN):
        w = np.ones(len(pool))
        for i, name in enumerate(IMPORT_POOL):
            if name in benign_only:
                w[i] = 0.0 if label is Label.MALICIOUS else _BENIGN_ONLY_WEIGHT
        weights[label] = w / w.sum()

    records: list[SampleRecord] = []
    for label, prefix in ((Label.MALICIOUS, "mal"), (Label.BENIGN, "ben")):
        cls = 0 if label is Label.MALICIOUS else 1
        numerics = {
            name: _draw_numeric(per_class[cls], count_per_class, rng)
            for name, per_class in CLASS_MARGINALS.items()
        }
        has_debug = rng.random(count_per_class) < P_HAS_DEBUG[label]
        has_signature = rng.random(count_per_class) < P_HAS_SIGNATURE[label]
        entries = rng.choice(entry_names, size=count_per_class, p=entry_probs)
        n_funcs = rng.integers(5, 26, size=count_per_class)
        for i in range(count_per_class):
            funcs = rng.choice(pool, size=int(n_funcs[i]), replace=False, p=weights[label])
            libs = frozenset(f.split(":")[0] for f in funcs)
            records.append(
                SampleRecord(
                    sample_id=f"{prefix}-{i:06d}",
                    label=label,
                    strings_entropy=float(numerics["strings_entropy"][i]),
                    num_strings=int(numerics["num_strings"][i]),
                    file_size=int(numerics["file_size"][i]),
                    num_exports=int(numerics["num_exports"][i]),
                    num_imports=int(numerics["num_imports"][i]),
                    timestamp=int(numerics["timestamp"][i]),
                    size_of_code=int(numerics["size_of_code"][i]),
                    num_sections=int(numerics["num_sections"][i]),
                    has_debug=bool(has_debug[i]),
                    has_signature=bool(has_signature[i]),
                    entry_section=str(entries[i]),
                    imported_libraries=libs,
                    imported_functions=frozenset(str(f) for f in funcs),
                )
            )
    return records
