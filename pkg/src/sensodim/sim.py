"""Head/eyes/light-sources simulator.

The agent is a head carrying two pinhole eyes; the environment is a set of
point light sources on a sphere centred on the head. Every degree of
freedom is a rotation, given in degrees at the interface.

World frame: x to the right, y forward, z up. At rest both optical axes
point along +y; the retina lies ``retina_focal`` behind the pinhole with its
axes aligned with the eye frame's x and z.
"""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

# Composition order of the three elementary rotations: R = tilt(z) @ roll(y) @ pitch(x).
ROTATION_ORDER = ("tilt", "roll", "pitch")

N_AGENT_DOF = 9
REST_CONE_HALF_ANGLE = 30.0  # degrees, forward cone in which C0 sources are drawn
ZERO_STD = 1e-30


def rng_stream(seed: int, *names: object) -> np.random.Generator:
    """Independent generator for a named stream derived from ``seed``.

    Streams with different names are statistically independent, and a
    stream can be recreated in isolation from ``(seed, *names)``.
    """
    key = "/".join(str(n) for n in names).encode()
    words = np.frombuffer(hashlib.sha256(key).digest()[:16], dtype=np.uint32)
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, *words.tolist()]))


class ExplorationMode(str, enum.Enum):
    AGENT = "agent"
    ENVIRONMENT = "env"
    BOTH = "both"

    @classmethod
    def parse(cls, value: "ExplorationMode | str") -> "ExplorationMode":
        if isinstance(value, cls):
            return value
        aliases = {"agentonly": "agent", "environmentonly": "env", "environment": "env"}
        key = str(value).lower().replace("_", "").replace("-", "")
        return cls(aliases.get(key, key))


@dataclass(frozen=True)
class SystemSpec:
    n_sources: int = 3
    cones_per_eye: int = 20
    cone_sensitivity: float = 1e-3
    sphere_radius: float = 100.0
    eye_offsets: tuple[tuple[float, float, float], tuple[float, float, float]] = (
        (-5.0, 5.0, 5.0),
        (5.0, 5.0, 5.0),
    )
    retina_focal: float = 1.0
    cone_box_halfwidth: float = 1.0
    seed: int = 0

    def __post_init__(self):
        checks = {
            "n_sources": self.n_sources >= 1,
            "cones_per_eye": self.cones_per_eye >= 1,
            "cone_sensitivity": self.cone_sensitivity > 0,
            "sphere_radius": self.sphere_radius > 0,
            "retina_focal": self.retina_focal > 0,
            "cone_box_halfwidth": self.cone_box_halfwidth > 0,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"invalid SystemSpec.{name}: {getattr(self, name)!r}")
        offsets = np.asarray(self.eye_offsets, dtype=float)
        if offsets.shape != (2, 3) or not np.all(np.isfinite(offsets)):
            raise ValueError(f"invalid SystemSpec.eye_offsets: {self.eye_offsets!r}")
        object.__setattr__(self, "eye_offsets", tuple(tuple(float(v) for v in row) for row in offsets))

    @property
    def n_dof(self) -> int:
        return N_AGENT_DOF + 2 * self.n_sources

    @property
    def n_sensors(self) -> int:
        return 2 * self.cones_per_eye


@dataclass(frozen=True)
class Configuration:
    """One joint agent/environment configuration, angles in degrees.

    Vector layout: head (3), left eye (3), right eye (3), azimuths, elevations.
    """

    head: tuple[float, float, float] = (0.0, 0.0, 0.0)
    left_eye: tuple[float, float, float] = (0.0, 0.0, 0.0)
    right_eye: tuple[float, float, float] = (0.0, 0.0, 0.0)
    azimuths: tuple[float, ...] = ()
    elevations: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.azimuths) != len(self.elevations):
            raise ValueError("azimuths and elevations must have the same length")

    @property
    def n_sources(self) -> int:
        return len(self.azimuths)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.head, self.left_eye, self.right_eye, self.azimuths, self.elevations]).astype(float)

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "Configuration":
        v = [float(x) for x in vec]
        if len(v) < N_AGENT_DOF or (len(v) - N_AGENT_DOF) % 2:
            raise ValueError(f"configuration vector has invalid length {len(v)}")
        ns = (len(v) - N_AGENT_DOF) // 2
        return cls(
            head=tuple(v[0:3]),
            left_eye=tuple(v[3:6]),
            right_eye=tuple(v[6:9]),
            azimuths=tuple(v[9 : 9 + ns]),
            elevations=tuple(v[9 + ns :]),
        )


@dataclass(frozen=True, eq=False)
class System:
    spec: SystemSpec
    cone_positions: np.ndarray  # (2, cones_per_eye, 2) cm, left eye first
    reference_config: Configuration

    @property
    def n_sensors(self) -> int:
        return self.spec.n_sensors

    @property
    def n_dof(self) -> int:
        return self.spec.n_dof

    @property
    def c0(self) -> np.ndarray:
        return self.reference_config.to_vector()

    def to_dict(self) -> dict:
        spec = asdict(self.spec)
        spec["eye_offsets"] = [list(o) for o in self.spec.eye_offsets]
        return {
            "spec": spec,
            "cone_positions": self.cone_positions.tolist(),
            "reference_config": self.c0.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "System":
        spec_d = dict(d["spec"])
        spec_d["eye_offsets"] = tuple(tuple(o) for o in spec_d["eye_offsets"])
        cones = np.asarray(d["cone_positions"], dtype=float)
        return cls(SystemSpec(**spec_d), cones, Configuration.from_vector(d["reference_config"]))


def free_mask(n_sources: int, mode: ExplorationMode | str) -> np.ndarray:
    """Boolean mask over the configuration vector of the parameters a mode moves."""
    mode = ExplorationMode.parse(mode)
    mask = np.zeros(N_AGENT_DOF + 2 * n_sources, dtype=bool)
    if mode in (ExplorationMode.AGENT, ExplorationMode.BOTH):
        mask[:N_AGENT_DOF] = True
    if mode in (ExplorationMode.ENVIRONMENT, ExplorationMode.BOTH):
        mask[N_AGENT_DOF:] = True
    return mask


def build_system(spec: SystemSpec) -> System:
    hw = spec.cone_box_halfwidth
    cones = rng_stream(spec.seed, "cones").uniform(-hw, hw, size=(2, spec.cones_per_eye, 2))

    # C0 sources: uniform on the spherical cap around +y
    rng = rng_stream(spec.seed, "c0-sources")
    cos_max = np.cos(np.radians(REST_CONE_HALF_ANGLE))
    cos_t = rng.uniform(cos_max, 1.0, size=spec.n_sources)
    psi = rng.uniform(0.0, 2 * np.pi, size=spec.n_sources)
    sin_t = np.sqrt(1.0 - cos_t**2)
    x, y, z = sin_t * np.cos(psi), cos_t, sin_t * np.sin(psi)
    azimuths = np.degrees(np.arctan2(x, y))
    elevations = np.degrees(np.arcsin(z))
    c0 = Configuration(azimuths=tuple(azimuths.tolist()), elevations=tuple(elevations.tolist()))
    return System(spec, cones, c0)


def _rotations_rad(angles: np.ndarray) -> np.ndarray:
    """Batch of rotation matrices from (..., 3) pitch/roll/tilt angles in radians."""
    a, b, g = angles[..., 0], angles[..., 1], angles[..., 2]
    ca, sa = np.cos(a), np.sin(a)
    cb, sb = np.cos(b), np.sin(b)
    cg, sg = np.cos(g), np.sin(g)
    # Rz(g) @ Ry(b) @ Rx(a)
    R = np.empty(angles.shape[:-1] + (3, 3))
    R[..., 0, 0] = cg * cb
    R[..., 0, 1] = cg * sb * sa - sg * ca
    R[..., 0, 2] = cg * sb * ca + sg * sa
    R[..., 1, 0] = sg * cb
    R[..., 1, 1] = sg * sb * sa + cg * ca
    R[..., 1, 2] = sg * sb * ca - cg * sa
    R[..., 2, 0] = -sb
    R[..., 2, 1] = cb * sa
    R[..., 2, 2] = cb * ca
    return R


def rotation_operator(angles: Sequence[float]) -> np.ndarray:
    """3x3 rotation for (pitch, roll, tilt) in degrees, composed as tilt @ roll @ pitch."""
    return _rotations_rad(np.radians(np.asarray(angles, dtype=float)))


def source_world_position(theta: float, phi: float, radius: float) -> np.ndarray:
    """Point on the sphere at azimuth ``theta`` and elevation ``phi`` (degrees).

    Azimuth is measured from the sagittal (x=0) plane, elevation from the
    horizontal plane; (0, 0) is straight ahead along +y.
    """
    return _source_positions(np.radians(np.asarray(theta, float)), np.radians(np.asarray(phi, float)), radius)


def _source_positions(theta, phi, radius):
    cp = np.cos(phi)
    return radius * np.stack([cp * np.sin(theta), cp * np.cos(theta), np.sin(phi)], axis=-1)


def project_source(eye_position, eye_rotation, source, focal: float = 1.0):
    """Pinhole projection of a world point onto an eye's retina.

    Returns the 2-vector retinal position in cm, or None when the source is
    not in front of the lens.
    """
    q = np.asarray(eye_rotation, float).T @ (np.asarray(source, float) - np.asarray(eye_position, float))
    depth = q[1]
    if depth <= 0:
        return None
    return -focal * np.array([q[0], q[2]]) / depth


def _sense_batch(system: System, configs: np.ndarray) -> np.ndarray:
    """Sensory vectors for a (N, n_dof) batch of configurations, shape (N, n)."""
    spec = system.spec
    ns = spec.n_sources
    rad = np.radians(configs)
    R_head = _rotations_rad(rad[:, 0:3])
    src = _source_positions(rad[:, 9 : 9 + ns], rad[:, 9 + ns :], spec.sphere_radius)  # (N, ns, 3)
    out = []
    for eye, sl in enumerate((slice(3, 6), slice(6, 9))):
        R_eye = R_head @ _rotations_rad(rad[:, sl])
        pos = R_head @ np.asarray(spec.eye_offsets[eye])  # (N, 3)
        rel = src - pos[:, None, :]
        q = np.einsum("nji,nkj->nki", R_eye, rel)  # eye-frame coordinates
        depth = q[..., 1]
        visible = depth > 0
        safe = np.where(visible, depth, 1.0)
        proj = -spec.retina_focal * np.stack([q[..., 0], q[..., 2]], axis=-1) / safe[..., None]
        dist2_src = np.einsum("nki,nki->nk", rel, rel)
        weight = np.where(visible, spec.cone_sensitivity / dist2_src, 0.0)  # (N, ns)
        diff = system.cone_positions[eye][None, :, None, :] - proj[:, None, :, :]  # (N, cones, ns, 2)
        d2 = np.einsum("nckd,nckd->nck", diff, diff)
        out.append(np.einsum("nck,nk->nc", np.exp(-d2), weight))
    return np.concatenate(out, axis=1)


def sense(system: System, config) -> np.ndarray:
    """Excitation of every cone (left eye then right eye) for one or many configurations.

    ``config`` may be a Configuration, a vector of length n_dof, or an
    (N, n_dof) array; the result has shape (n,) or (N, n) accordingly.
    """
    if isinstance(config, Configuration):
        config = config.to_vector()
    arr = np.asarray(config, dtype=float)
    single = arr.ndim == 1
    batch = np.atleast_2d(arr)
    if batch.shape[1] != system.n_dof:
        raise ValueError(f"configuration length {batch.shape[1]} does not match system ({system.n_dof})")
    s = _sense_batch(system, batch)
    return s[0] if single else s


def sample_configurations(
    system: System, mode: ExplorationMode | str, amplitude: float, n: int, seed: int
) -> np.ndarray:
    """Draw ``n`` configurations around C0, shape (n, n_dof).

    Free parameters get an i.i.d. uniform offset in [-amplitude, amplitude];
    frozen ones are copied from C0 bit for bit.
    """
    if not amplitude > 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    if n < 1:
        raise ValueError(f"need at least one configuration, got {n}")
    mask = free_mask(system.spec.n_sources, mode)
    offsets = rng_stream(seed, "configs").uniform(-amplitude, amplitude, size=(n, int(mask.sum())))
    return configs_from_offsets(system, mode, offsets.T)


def configs_from_offsets(system: System, mode: ExplorationMode | str, offsets: np.ndarray) -> np.ndarray:
    """Expand a (dof_free, N) offset matrix into (N, n_dof) configurations."""
    mask = free_mask(system.spec.n_sources, mode)
    c0 = system.c0
    configs = np.tile(c0, (offsets.shape[1], 1))
    configs[:, mask] = c0[mask] + offsets.T
    return configs


def offsets_from_configs(system: System, mode: ExplorationMode | str, configs: np.ndarray) -> np.ndarray:
    mask = free_mask(system.spec.n_sources, mode)
    return (np.asarray(configs)[:, mask] - system.c0[mask]).T


def sensory_variations(system: System, configs: np.ndarray) -> np.ndarray:
    """Raw n x N matrix whose column i is phi(C_i) - phi(C0)."""
    s0 = sense(system, system.c0)
    return (sense(system, np.atleast_2d(configs)) - s0).T


def center_reduce(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-wise centering and scaling to unit std.

    Rows whose std is below 1e-30 are only centred. Returns
    ``(data, mean, scale)`` with ``scale`` set to 1 for such rows.
    """
    mean = raw.mean(axis=1)
    centred = raw - mean[:, None]
    std = centred.std(axis=1)
    scale = np.where(std < ZERO_STD, 1.0, std)
    return centred / scale[:, None], mean, scale


@dataclass(eq=False)
class VariationMatrix:
    data: np.ndarray  # (n, N), centred and reduced
    mode: ExplorationMode | None = None
    amplitude: float | None = None
    mean: np.ndarray = field(default=None, repr=False)
    scale: np.ndarray = field(default=None, repr=False)
    raw: np.ndarray | None = field(default=None, repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @classmethod
    def from_raw(cls, raw: np.ndarray, mode=None, amplitude=None) -> "VariationMatrix":
        data, mean, scale = center_reduce(np.asarray(raw, dtype=float))
        mode = ExplorationMode.parse(mode) if mode is not None else None
        return cls(data, mode, amplitude, mean, scale, np.asarray(raw, dtype=float))

    def to_csv(self, path: str | Path) -> None:
        np.savetxt(path, self.data, delimiter=",", fmt="%.17g")

    @classmethod
    def from_csv(cls, path: str | Path) -> "VariationMatrix":
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        return cls(data, mean=np.zeros(data.shape[0]), scale=np.ones(data.shape[0]))


def explore(system: System, configs: np.ndarray, mode=None, amplitude=None) -> VariationMatrix:
    configs = np.atleast_2d(np.asarray(configs, dtype=float))
    if configs.shape[0] == 0:
        raise ValueError("explore needs at least one configuration")
    return VariationMatrix.from_raw(sensory_variations(system, configs), mode, amplitude)


def save_system(system: System, path: str | Path, configs: np.ndarray | None = None) -> None:
    d = system.to_dict()
    if configs is not None:
        d["configs"] = np.asarray(configs).tolist()
    Path(path).write_text(json.dumps(d, indent=1))


def load_system(path: str | Path) -> tuple[System, np.ndarray | None]:
    d = json.loads(Path(path).read_text())
    configs = np.asarray(d["configs"], dtype=float) if "configs" in d else None
    return System.from_dict(d), configs
