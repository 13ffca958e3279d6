"""Physical parameters, protocols and validation for dispersive readout setups.

Conventions
-----------
* Rates are measured in units of a reference cavity linewidth; with the
  default ``kappa=1`` every time is already expressed as ``kappa * t``.
* Quadratures follow ``a = (X + iY) / 2``: vacuum has unit variance and a
  white vacuum input obeys ``<X_in(t) X_in(t')> = delta(t - t')``.
* ``Ground`` rotates the reflected field by ``+phi_qb``, ``Excited`` by
  ``-phi_qb``, with ``phi_qb = 2 arctan(2 chi / kappa)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Mapping

__all__ = [
    "Protocol",
    "QubitState",
    "LossPlacement",
    "CavityParams",
    "SqueezeSource",
    "LossModel",
    "ReadoutConfig",
    "ValidatedConfig",
    "PhotonBudget",
    "ConfigError",
    "NegativeRate",
    "EfficiencyOutOfRange",
    "ProtocolCavityMismatch",
    "validate",
    "qubit_rotation_angle",
    "photon_budget",
    "load_config",
    "config_from_dict",
    "config_to_dict",
]


class ConfigError(ValueError):
    """Invalid readout configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class NegativeRate(ConfigError):
    pass


class EfficiencyOutOfRange(ConfigError):
    pass


class ProtocolCavityMismatch(ConfigError):
    pass


class Protocol(str, enum.Enum):
    COHERENT = "coherent"
    SINGLE_MODE = "single_mode_squeezed"
    TWO_MODE = "two_mode_qmfs"


class QubitState(enum.Enum):
    GROUND = 1
    EXCITED = -1

    @property
    def sign(self) -> int:
        return self.value


class LossPlacement(str, enum.Enum):
    OUTPUT = "output"
    INPUT = "input"


@dataclass(frozen=True)
class CavityParams:
    kappa: float = 1.0
    chi: float = 0.5


@dataclass(frozen=True)
class SqueezeSource:
    """Squeezed-vacuum source feeding the cavity input(s).

    ``bandwidth = inf`` is a broadband (white) source and ``t0 = -inf`` means
    the cavities are already in their squeezed steady state at ``t = 0``.
    For a single-mode source the antisqueezed axis sits at angle ``theta``
    from ``X``, so the ``X`` input variance is
    ``cos(theta)**2 e^{2r} + sin(theta)**2 e^{-2r}``.
    """

    r: float = 0.0
    theta: float = 0.0
    bandwidth: float = math.inf
    t0: float = -math.inf

    @property
    def broadband(self) -> bool:
        return math.isinf(self.bandwidth)

    @property
    def presqueezed(self) -> bool:
        return math.isinf(self.t0)


@dataclass(frozen=True)
class LossModel:
    eta: float = 1.0
    placement: LossPlacement = LossPlacement.OUTPUT


@dataclass(frozen=True)
class ReadoutConfig:
    """Full description of one readout experiment.

    ``nbar0`` sets the coherent drive: the incident flux is
    ``nbar0 * kappa / 4`` for one cavity and ``nbar0 * kappa / 8`` on each of
    two cavities, with the two drives in antiphase so the displacement lies
    along ``X_-``. ``drive_presettled`` starts the cavity in the driven steady
    state instead of switching the tone on at ``t = 0``.
    """

    protocol: Protocol = Protocol.COHERENT
    cavities: tuple[CavityParams, ...] = (CavityParams(),)
    nbar0: float = 1.0
    source: SqueezeSource = field(default_factory=SqueezeSource)
    loss: LossModel = field(default_factory=LossModel)
    tau: float = 10.0
    qubit_state: QubitState = QubitState.GROUND
    drive_presettled: bool = False

    # -- convenience constructors -------------------------------------------

    @classmethod
    def coherent(cls, chi=0.5, kappa=1.0, nbar0=1.0, tau=10.0, eta=1.0, **kw):
        return cls(
            protocol=Protocol.COHERENT,
            cavities=(CavityParams(kappa, chi),),
            nbar0=nbar0,
            loss=LossModel(eta),
            tau=tau,
            **kw,
        )

    @classmethod
    def single_mode(cls, r, theta=math.pi / 2, chi=0.5, kappa=1.0, nbar0=1.0,
                    tau=10.0, eta=1.0, bandwidth=math.inf, t0=-math.inf, **kw):
        return cls(
            protocol=Protocol.SINGLE_MODE,
            cavities=(CavityParams(kappa, chi),),
            nbar0=nbar0,
            source=SqueezeSource(r, theta, bandwidth, t0),
            loss=LossModel(eta),
            tau=tau,
            **kw,
        )

    @classmethod
    def qmfs(cls, r, chi=0.5, kappa=1.0, nbar0=1.0, tau=10.0, eta=1.0,
             bandwidth=math.inf, t0=-math.inf, **kw):
        return cls(
            protocol=Protocol.TWO_MODE,
            cavities=(CavityParams(kappa, chi), CavityParams(kappa, -chi)),
            nbar0=nbar0,
            source=SqueezeSource(r, 0.0, bandwidth, t0),
            loss=LossModel(eta),
            tau=tau,
            **kw,
        )

    @classmethod
    def asymmetric(cls, r, dchi, chi_bar=0.5, dkappa=0.0, kappa_bar=1.0,
                   nbar0=1.0, tau=10.0, **kw):
        """Two-cavity setup with ``chi_{1,2} = dchi +- chi_bar`` and
        ``kappa_{1,2} = kappa_bar +- dkappa``."""
        cavities = (
            CavityParams(kappa_bar + dkappa, dchi + chi_bar),
            CavityParams(kappa_bar - dkappa, dchi - chi_bar),
        )
        return cls(
            protocol=Protocol.TWO_MODE,
            cavities=cavities,
            nbar0=nbar0,
            source=SqueezeSource(r),
            tau=tau,
            **kw,
        )

    def with_(self, **changes) -> "ReadoutConfig":
        """Copy with top-level fields, or ``r``/``theta``/``eta`` shortcuts."""
        source_keys = {"r", "theta", "bandwidth", "t0"}
        src = {k: changes.pop(k) for k in list(changes) if k in source_keys}
        if src:
            changes["source"] = replace(self.source, **src)
        if "eta" in changes:
            changes["loss"] = replace(self.loss, eta=changes.pop("eta"))
        return replace(self, **changes)


def qubit_rotation_angle(chi, kappa):
    """Return ``phi_qb = 2 arctan(2 chi / kappa)``, the qubit-induced output rotation."""
    if kappa <= 0:
        raise NegativeRate("kappa", f"must be positive, got {kappa}")
    return 2.0 * math.atan(2.0 * chi / kappa)


@dataclass(frozen=True)
class ValidatedConfig:
    config: ReadoutConfig
    phi_qb: tuple[float, ...]
    kappa_ref: float
    chi_bar: float
    dchi: float
    kappa_bar: float
    dkappa: float

    def into_config(self) -> ReadoutConfig:
        return self.config

    @property
    def n_cavities(self) -> int:
        return len(self.config.cavities)

    def __getattr__(self, name):
        # read-through to the wrapped config
        if name.startswith("__"):
            raise AttributeError(name)
        return getattr(self.config, name)


def _finite(name, value):
    if not math.isfinite(value):
        raise ConfigError(name, f"must be finite, got {value}")


def validate(config: ReadoutConfig | ValidatedConfig) -> ValidatedConfig:
    """Check a configuration and attach derived quantities.

    Raises
    ------
    NegativeRate, EfficiencyOutOfRange, ProtocolCavityMismatch, ConfigError
    """
    if isinstance(config, ValidatedConfig):
        config = config.config

    try:
        protocol = Protocol(config.protocol)
    except ValueError:
        raise ConfigError("protocol", f"unknown protocol {config.protocol!r}") from None
    n_cav = len(config.cavities)
    if protocol is Protocol.TWO_MODE and n_cav != 2:
        raise ProtocolCavityMismatch(
            "cavities", f"{protocol.value} needs exactly two cavities, got {n_cav}")
    if protocol is not Protocol.TWO_MODE and n_cav not in (1, 2):
        raise ProtocolCavityMismatch("cavities", f"expected one or two cavities, got {n_cav}")
    if protocol is Protocol.SINGLE_MODE and n_cav != 1:
        raise ProtocolCavityMismatch(
            "cavities", f"{protocol.value} needs exactly one cavity, got {n_cav}")

    for j, cav in enumerate(config.cavities):
        _finite(f"cavities[{j}].kappa", cav.kappa)
        _finite(f"cavities[{j}].chi", cav.chi)
        if cav.kappa <= 0:
            raise NegativeRate(f"cavities[{j}].kappa", f"must be positive, got {cav.kappa}")

    _finite("nbar0", config.nbar0)
    if config.nbar0 < 0:
        raise NegativeRate("nbar0", f"must be >= 0, got {config.nbar0}")
    _finite("tau", config.tau)
    if config.tau <= 0:
        raise ConfigError("tau", f"must be positive, got {config.tau}")

    src = config.source
    _finite("source.r", src.r)
    _finite("source.theta", src.theta)
    if src.r < 0:
        raise ConfigError("source.r", f"must be >= 0, got {src.r}")
    if protocol is Protocol.COHERENT and src.r != 0:
        raise ConfigError("source.r", "coherent protocol requires r = 0")
    if not (src.bandwidth > 0):
        raise NegativeRate("source.bandwidth", f"must be positive, got {src.bandwidth}")
    if math.isnan(src.t0) or src.t0 > 0:
        raise ConfigError("source.t0", f"must be <= 0, got {src.t0}")

    eta = config.loss.eta
    if not (0.0 <= eta <= 1.0):
        raise EfficiencyOutOfRange("loss.eta", f"must lie in [0, 1], got {eta}")
    try:
        LossPlacement(config.loss.placement)
    except ValueError:
        raise ConfigError("loss.placement", f"unknown placement {config.loss.placement!r}") from None

    kappas = [c.kappa for c in config.cavities]
    chis = [c.chi for c in config.cavities]
    phis = tuple(qubit_rotation_angle(c.chi, c.kappa) for c in config.cavities)
    kappa_ref = sum(kappas) / n_cav
    if n_cav == 2:
        chi_bar = 0.5 * (chis[0] - chis[1])
        dchi = 0.5 * (chis[0] + chis[1])
        kappa_bar = kappa_ref
        dkappa = 0.5 * (kappas[0] - kappas[1])
    else:
        chi_bar, dchi, kappa_bar, dkappa = chis[0], 0.0, kappas[0], 0.0

    return ValidatedConfig(config, phis, kappa_ref, chi_bar, dchi, kappa_bar, dkappa)


@dataclass(frozen=True)
class PhotonBudget:
    N: float
    N_s: float
    N_d: float
    n_bar: float


def photon_budget(config: ReadoutConfig | ValidatedConfig) -> PhotonBudget:
    """Input and intracavity photon numbers for the measurement window.

    Squeezing contributes ``2 sinh^2 r`` (two-mode) or ``sinh^2 r`` (single
    mode); the drive contributes ``nbar0 kappa tau / 4``. The intracavity
    number is the steady-state value ``nbar0 cos^2(phi/2) + N_s``.
    """
    v = validate(config)
    r = v.config.source.r
    per_mode = math.sinh(r) ** 2
    n_s = 2 * per_mode if v.config.protocol is Protocol.TWO_MODE else per_mode
    n_d = 0.25 * v.config.nbar0 * v.kappa_ref * v.config.tau
    phi = v.phi_qb[0]
    n_bar = v.config.nbar0 * math.cos(phi / 2) ** 2 + n_s
    return PhotonBudget(N=n_s + n_d, N_s=n_s, N_d=n_d, n_bar=n_bar)


# -- JSON ingestion ---------------------------------------------------------

_TOP_KEYS = {"protocol", "cavities", "nbar0", "source", "loss", "tau_kappa",
             "qubit_state", "drive_presettled"}
_SOURCE_KEYS = {"r", "e2r", "theta", "bandwidth_kappa", "t0_kappa"}
_CAVITY_KEYS = {"kappa", "chi"}
_LOSS_KEYS = {"eta", "placement"}


def _check_keys(section, data, allowed):
    if not isinstance(data, Mapping):
        raise ConfigError(section, "expected an object")
    extra = set(data) - allowed
    if extra:
        raise ConfigError(section, f"unknown keys {sorted(extra)}")


def _number(section, value, default=None):
    if value is None:
        if default is None:
            raise ConfigError(section, "missing value")
        return default
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(section, f"expected a number, got {value!r}")
    return float(value)


def config_from_dict(data: Mapping[str, Any]) -> ReadoutConfig:
    """Build a :class:`ReadoutConfig` from the JSON schema documented in the README."""
    _check_keys("config", data, _TOP_KEYS)
    try:
        protocol = Protocol(data.get("protocol", "coherent"))
    except ValueError:
        raise ConfigError("protocol", f"unknown protocol {data.get('protocol')!r}") from None

    cav_data = data.get("cavities")
    if cav_data is None:
        cav_data = [{"kappa": 1.0, "chi": 0.5}]
        if protocol is Protocol.TWO_MODE:
            cav_data.append({"kappa": 1.0, "chi": -0.5})
    if not isinstance(cav_data, list):
        raise ConfigError("cavities", "expected a list")
    cavities = []
    for j, c in enumerate(cav_data):
        _check_keys(f"cavities[{j}]", c, _CAVITY_KEYS)
        cavities.append(CavityParams(
            _number(f"cavities[{j}].kappa", c.get("kappa"), 1.0),
            _number(f"cavities[{j}].chi", c.get("chi"), 0.5),
        ))

    s = data.get("source", {}) or {}
    _check_keys("source", s, _SOURCE_KEYS)
    if "r" in s and "e2r" in s:
        raise ConfigError("source", "give either r or e2r, not both")
    if "e2r" in s:
        e2r = _number("source.e2r", s["e2r"])
        if e2r < 1:
            raise ConfigError("source.e2r", f"must be >= 1, got {e2r}")
        r = 0.5 * math.log(e2r)
    else:
        r = _number("source.r", s.get("r"), 0.0)
    bw = s.get("bandwidth_kappa")
    t0 = s.get("t0_kappa")
    source = SqueezeSource(
        r=r,
        theta=_number("source.theta", s.get("theta"), 0.0),
        bandwidth=math.inf if bw is None else _number("source.bandwidth_kappa", bw),
        t0=-math.inf if t0 is None else _number("source.t0_kappa", t0),
    )

    l = data.get("loss", {}) or {}
    _check_keys("loss", l, _LOSS_KEYS)
    try:
        placement = LossPlacement(l.get("placement", "output"))
    except ValueError:
        raise ConfigError("loss.placement", f"unknown placement {l.get('placement')!r}") from None
    loss = LossModel(_number("loss.eta", l.get("eta"), 1.0), placement)

    qs = data.get("qubit_state", "ground")
    if qs not in ("ground", "excited"):
        raise ConfigError("qubit_state", f"expected 'ground' or 'excited', got {qs!r}")

    presettled = data.get("drive_presettled", False)
    if not isinstance(presettled, bool):
        raise ConfigError("drive_presettled", "expected true or false")

    return ReadoutConfig(
        protocol=protocol,
        cavities=tuple(cavities),
        nbar0=_number("nbar0", data.get("nbar0"), 1.0),
        source=source,
        loss=loss,
        tau=_number("tau_kappa", data.get("tau_kappa"), 10.0),
        qubit_state=QubitState.GROUND if qs == "ground" else QubitState.EXCITED,
        drive_presettled=presettled,
    )


def config_to_dict(config: ReadoutConfig | ValidatedConfig) -> dict:
    if isinstance(config, ValidatedConfig):
        config = config.config
    src = config.source
    return {
        "protocol": Protocol(config.protocol).value,
        "cavities": [asdict(c) for c in config.cavities],
        "nbar0": config.nbar0,
        "source": {
            "r": src.r,
            "theta": src.theta,
            "bandwidth_kappa": None if src.broadband else src.bandwidth,
            "t0_kappa": None if src.presqueezed else src.t0,
        },
        "loss": {"eta": config.loss.eta, "placement": LossPlacement(config.loss.placement).value},
        "tau_kappa": config.tau,
        "qubit_state": config.qubit_state.name.lower(),
        "drive_presettled": config.drive_presettled,
    }


def load_config(path) -> ValidatedConfig:
    """Read and validate a JSON config file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    return validate(config_from_dict(data))
