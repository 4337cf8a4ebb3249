"""Room geometry, transmitters, receiver front end and LOS optical gains.

Scenes are read from a YAML (or JSON) document::

    room:
      extent_m: [1.6, 1.6]
      tx_height_m: 2.0
    transmitters:
      - {id: 1, pos_m: [0.4, 0.8], power_w: 2.0, semi_angle_deg: 30, cell_id: "01"}
      - {id: 2, pos_m: [1.2, 0.8], power_w: 2.0, semi_angle_deg: 30, cell_id: "10"}
    receiver:
      area_m2: 1.0e-4
      fov_deg: 70
      responsivity_a_per_w: 0.5
      bit_rate_hz: 1000
      samples_per_bit: 50
      noise_std_a: 1.0e-6
      ambient_dc_a: 0.0

Transmitters hang ``tx_height_m`` above the receiver plane and point straight
down; the receiver is face-up.  All quantities are SI.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

__all__ = [
    "SceneError",
    "Transmitter",
    "ReceiverParams",
    "Scene",
    "load_scene",
    "load_scene_file",
    "resolve_config_path",
    "dump_scene",
    "lambertian_order",
    "los_gain",
    "grid_positions",
]

SCENE_DIR_ENV = "VLC_HANDOVER_SCENE_DIR"


class SceneError(ValueError):
    """Invalid scene document or violated scene invariant."""


def _parse_cell_id(value: Any, where: str) -> tuple[int, int]:
    text = str(value) if not isinstance(value, (list, tuple)) else "".join(str(v) for v in value)
    if len(text) != 2 or any(c not in "01" for c in text):
        raise SceneError(f"{where}.cell_id: expected exactly 2 bits like '01', got {value!r}")
    return int(text[0]), int(text[1])


@dataclass(frozen=True)
class Transmitter:
    id: int
    position: tuple[float, float, float]
    optical_power: float
    semi_angle: float
    cell_id: tuple[int, int]

    def __post_init__(self):
        if not self.optical_power > 0:
            raise SceneError(f"transmitter {self.id}: optical_power must be > 0")
        if not 0 < self.semi_angle < math.pi / 2:
            raise SceneError(f"transmitter {self.id}: semi_angle must be in (0, pi/2)")
        if len(self.cell_id) != 2 or any(b not in (0, 1) for b in self.cell_id):
            raise SceneError(f"transmitter {self.id}: cell_id must be a bit pair")

    @property
    def cell_id_str(self) -> str:
        return f"{self.cell_id[0]}{self.cell_id[1]}"


@dataclass(frozen=True)
class ReceiverParams:
    detector_area: float
    fov: float
    responsivity: float
    bit_rate: float
    samples_per_bit: int
    noise_std: float
    ambient_dc: float = 0.0

    def __post_init__(self):
        checks = [
            (self.detector_area > 0, "detector_area must be > 0"),
            (0 < self.fov <= math.pi / 2, "fov must be in (0, pi/2]"),
            (self.responsivity > 0, "responsivity must be > 0"),
            (self.bit_rate > 0, "bit_rate must be > 0"),
            (int(self.samples_per_bit) == self.samples_per_bit and self.samples_per_bit >= 2,
             "samples_per_bit must be an integer >= 2"),
            (self.noise_std >= 0, "noise_std must be >= 0"),
            (self.ambient_dc >= 0, "ambient_dc must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise SceneError(f"receiver.{msg}")

    @property
    def ts(self) -> float:
        """Sampling period in seconds."""
        return 1.0 / (self.bit_rate * self.samples_per_bit)


@dataclass(frozen=True)
class Scene:
    room_extent: tuple[float, float]
    tx_height: float
    transmitters: tuple[Transmitter, ...]
    receiver: ReceiverParams
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if len(self.room_extent) != 2 or min(self.room_extent) <= 0:
            raise SceneError("room.extent_m must be two positive lengths")
        if not self.tx_height > 0:
            raise SceneError("room.tx_height_m must be > 0")
        if len(self.transmitters) < 2:
            raise SceneError("transmitters: scene needs at least 2 transmitters")
        ids = [t.id for t in self.transmitters]
        if len(set(ids)) != len(ids):
            raise SceneError("transmitters: ids must be distinct")
        cells = [t.cell_id for t in self.transmitters]
        if len(set(cells)) != len(cells):
            raise SceneError("transmitters: cell IDs must be distinct")
        for t in self.transmitters:
            x, y, z = t.position
            if not (0 <= x <= self.room_extent[0] and 0 <= y <= self.room_extent[1]):
                raise SceneError(f"transmitters[{t.id}].pos_m lies outside room extent")
            if z != self.tx_height:
                raise SceneError(f"transmitters[{t.id}]: height must equal room.tx_height_m")

    def contains(self, xy: Sequence[float]) -> bool:
        return 0 <= xy[0] <= self.room_extent[0] and 0 <= xy[1] <= self.room_extent[1]

    def transmitter(self, tx_id: int) -> Transmitter:
        for t in self.transmitters:
            if t.id == tx_id:
                return t
        raise KeyError(tx_id)

    def with_receiver(self, **changes) -> "Scene":
        return replace(self, receiver=replace(self.receiver, **changes))

    def with_power_scale(self, factor: float) -> "Scene":
        txs = tuple(replace(t, optical_power=t.optical_power * factor) for t in self.transmitters)
        return replace(self, transmitters=txs)

    def gains(self, rx_xy: Sequence[float]) -> np.ndarray:
        """LOS gain from every transmitter to a receiver-plane point, in transmitter order."""
        pos = (float(rx_xy[0]), float(rx_xy[1]), 0.0)
        return np.array([los_gain(t, pos, self.receiver) for t in self.transmitters])

    def levels(self, rx_xy: Sequence[float]) -> np.ndarray:
        """Photocurrent (A) each transmitter contributes when its LED is on."""
        powers = np.array([t.optical_power for t in self.transmitters])
        return self.receiver.responsivity * powers * self.gains(rx_xy)


def _require(mapping: Any, key: str, where: str) -> Any:
    if not isinstance(mapping, dict):
        raise SceneError(f"{where}: expected a mapping")
    if key not in mapping:
        raise SceneError(f"{where}.{key}: missing")
    return mapping[key]


def _number(mapping: dict, key: str, where: str) -> float:
    value = _require(mapping, key, where)
    if isinstance(value, str):
        # YAML 1.1 reads exponents without a dot (1e-4) as strings
        try:
            return float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneError(f"{where}.{key}: expected a number, got {value!r}")
    return float(value)


def _pair(mapping: dict, key: str, where: str) -> tuple[float, float]:
    value = _require(mapping, key, where)
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise SceneError(f"{where}.{key}: expected [x, y]")
    try:
        return float(value[0]), float(value[1])
    except (TypeError, ValueError):
        raise SceneError(f"{where}.{key}: expected numbers") from None


def scene_from_dict(doc: Any, name: str = "") -> Scene:
    if not isinstance(doc, dict):
        raise SceneError("scene document must be a mapping")
    room = _require(doc, "room", "scene")
    extent = _pair(room, "extent_m", "room")
    height = _number(room, "tx_height_m", "room")

    txs_doc = _require(doc, "transmitters", "scene")
    if not isinstance(txs_doc, list):
        raise SceneError("transmitters: expected a list")
    txs = []
    for i, t in enumerate(txs_doc):
        where = f"transmitters[{i}]"
        tx_id = _require(t, "id", where)
        if isinstance(tx_id, bool) or not isinstance(tx_id, int):
            raise SceneError(f"{where}.id: expected an integer")
        x, y = _pair(t, "pos_m", where)
        txs.append(
            Transmitter(
                id=tx_id,
                position=(x, y, height),
                optical_power=_number(t, "power_w", where),
                semi_angle=math.radians(_number(t, "semi_angle_deg", where)),
                cell_id=_parse_cell_id(_require(t, "cell_id", where), where),
            )
        )

    rx = _require(doc, "receiver", "scene")
    spb = _require(rx, "samples_per_bit", "receiver")
    if isinstance(spb, bool) or not isinstance(spb, int):
        raise SceneError("receiver.samples_per_bit: expected an integer")
    receiver = ReceiverParams(
        detector_area=_number(rx, "area_m2", "receiver"),
        fov=math.radians(_number(rx, "fov_deg", "receiver")),
        responsivity=_number(rx, "responsivity_a_per_w", "receiver"),
        bit_rate=_number(rx, "bit_rate_hz", "receiver"),
        samples_per_bit=spb,
        noise_std=_number(rx, "noise_std_a", "receiver"),
        ambient_dc=_number(rx, "ambient_dc_a", "receiver") if "ambient_dc_a" in rx else 0.0,
    )
    txs.sort(key=lambda t: t.id)
    return Scene(room_extent=extent, tx_height=height, transmitters=tuple(txs),
                 receiver=receiver, name=name)


def load_scene(config_text: str, name: str = "") -> Scene:
    """Parse and validate a scene document (YAML or JSON text)."""
    try:
        doc = json.loads(config_text)
    except ValueError:
        doc = None
    try:
        if doc is None:
            doc = yaml.safe_load(config_text)
    except yaml.YAMLError as exc:
        raise SceneError(f"scene document is not valid YAML/JSON: {exc}") from None
    return scene_from_dict(doc, name=name)


def _degrees_exact(rad: float) -> float:
    # shortest decimal degree value that maps back to the same radians
    deg = math.degrees(rad)
    for digits in range(6, 18):
        cand = round(deg, digits)
        if math.radians(cand) == rad:
            return cand
    for cand in (math.nextafter(deg, 0.0), math.nextafter(deg, math.inf)):
        if math.radians(cand) == rad:
            return cand
    return deg


def dump_scene(scene: Scene) -> str:
    """Serialize a scene to YAML; ``load_scene(dump_scene(s)) == s``."""
    rx = scene.receiver
    doc = {
        "room": {"extent_m": list(scene.room_extent), "tx_height_m": scene.tx_height},
        "transmitters": [
            {
                "id": t.id,
                "pos_m": [t.position[0], t.position[1]],
                "power_w": t.optical_power,
                "semi_angle_deg": _degrees_exact(t.semi_angle),
                "cell_id": t.cell_id_str,
            }
            for t in scene.transmitters
        ],
        "receiver": {
            "area_m2": rx.detector_area,
            "fov_deg": _degrees_exact(rx.fov),
            "responsivity_a_per_w": rx.responsivity,
            "bit_rate_hz": rx.bit_rate,
            "samples_per_bit": rx.samples_per_bit,
            "noise_std_a": rx.noise_std,
            "ambient_dc_a": rx.ambient_dc,
        },
    }
    return yaml.safe_dump(doc, sort_keys=False)


def resolve_config_path(name_or_path: str, suffixes=(".yaml", ".yml", ".json")) -> Path:
    """Resolve a config argument to a file.

    An existing path wins.  Otherwise the name is looked up in the directory
    named by ``$VLC_HANDOVER_SCENE_DIR`` and then among the bundled configs
    (``paper_scene``, ``paper_scene_ber``, ``paper_path``, ...).
    """
    p = Path(name_or_path)
    if p.is_file():
        return p
    candidates = []
    env_dir = os.environ.get(SCENE_DIR_ENV)
    if env_dir:
        candidates.append(Path(env_dir))
    candidates.append(Path(str(resources.files("vlc_handover") / "data")))
    for d in candidates:
        for suffix in ("", *suffixes):
            q = d / f"{name_or_path}{suffix}"
            if q.is_file():
                return q
    raise FileNotFoundError(f"no such config file or bundled config: {name_or_path!r}")


def load_scene_file(name_or_path: str) -> Scene:
    path = resolve_config_path(name_or_path)
    return load_scene(path.read_text(encoding="utf-8"), name=path.stem)


def lambertian_order(semi_angle: float) -> float:
    """Lambertian emission order ``m = -ln 2 / ln cos(semi_angle)``."""
    if not 0 < semi_angle < math.pi / 2:
        raise ValueError(f"semi_angle must be in (0, pi/2), got {semi_angle}")
    return -math.log(2.0) / math.log(math.cos(semi_angle))


def los_gain(tx: Transmitter, rx_pos: Sequence[float], rx: ReceiverParams) -> float:
    """Line-of-sight DC gain from a down-facing Lambertian LED to a face-up detector.

    ``H = (m+1) A cos^m(phi) cos(psi) / (2 pi d^2)`` inside the field of view,
    zero outside.  With both normals vertical, phi == psi.
    """
    dx = rx_pos[0] - tx.position[0]
    dy = rx_pos[1] - tx.position[1]
    dz = tx.position[2] - rx_pos[2]
    d2 = dx * dx + dy * dy + dz * dz
    if d2 == 0.0:
        raise ValueError("receiver coincides with transmitter")
    if dz <= 0:
        raise ValueError("receiver must lie strictly below the transmitter plane")
    d = math.sqrt(d2)
    cos_angle = dz / d
    if math.acos(min(1.0, cos_angle)) > rx.fov:
        return 0.0
    m = lambertian_order(tx.semi_angle)
    return (m + 1) * rx.detector_area * cos_angle**m * cos_angle / (2 * math.pi * d2)


def grid_positions(scene: Scene, nx: int, ny: int, spacing: float | None = None) -> list[tuple[float, float]]:
    """Cell-centre points of an ``nx`` x ``ny`` grid over the room, row-major (y outer, x inner).

    By default the grid tiles the whole room.  With an explicit ``spacing`` the
    grid is centred in the room and must fit inside it.
    """
    if nx < 1 or ny < 1:
        raise ValueError("grid dimensions must be >= 1")
    ex, ey = scene.room_extent
    if spacing is None:
        sx, sy = ex / nx, ey / ny
    else:
        sx = sy = float(spacing)
    wx, wy = sx * nx, sy * ny
    if wx > ex * (1 + 1e-12) or wy > ey * (1 + 1e-12):
        raise ValueError("grid exceeds room")
    x0 = (ex - wx) / 2 + sx / 2
    y0 = (ey - wy) / 2 + sy / 2
    return [(x0 + i * sx, y0 + j * sy) for j in range(ny) for i in range(nx)]
