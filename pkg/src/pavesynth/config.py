"""Human-editable experiment config files.

INI layout with JSON values, one section per config object::

    [scene]
    preset = "v1"
    condition = "dusk"
    image_size = [1920, 1080]

    [tile]
    base_gray = 0.5

    [crack]
    width_range_m = [0.03, 0.1]

    [augment]
    p_elastic = 0.5

``preset`` picks the base scene config (``v1`` or ``v2``); ``condition``
applies that condition's lighting preset; any other key overrides a field.
"""

from __future__ import annotations

import configparser
import json
from dataclasses import asdict, fields, replace
from io import StringIO
from pathlib import Path

from .augment import AugmentConfig
from .cracksynth import CrackParams
from .errors import ParameterError
from .scenecomp import SceneConfig, Spotlight, v1_config, v2_config
from .texturegen import TileSpec

PRESETS = {"v1": v1_config, "v2": v2_config}


def _section(parser, name):
    if not parser.has_section(name):
        return {}
    out = {}
    for key, raw in parser.items(name):
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParameterError(f"[{name}] {key}: value is not valid JSON: {raw!r}") from exc
    return out


def _typed(cls, values, section):
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - names)
    if unknown:
        raise ParameterError(f"[{section}] unknown keys: {', '.join(unknown)}")
    return {k: tuple(v) if isinstance(v, list) else v for k, v in values.items()}


def build_scene_config(
    scene: dict | None = None, tile: dict | None = None, crack: dict | None = None
) -> SceneConfig:
    scene = dict(scene or {})
    preset = scene.pop("preset", "v1")
    if preset not in PRESETS:
        raise ParameterError(f"unknown preset {preset!r}; expected one of {sorted(PRESETS)}")
    cfg = PRESETS[preset]()
    condition = scene.pop("condition", None)
    if condition is not None:
        cfg = cfg.with_condition(condition)
    if "spotlights" in scene:
        scene["spotlights"] = [
            Spotlight(**s) if isinstance(s, dict) else Spotlight(*s) for s in scene["spotlights"]
        ]
    overrides = _typed(SceneConfig, scene, "scene")
    if tile:
        overrides["tile_spec"] = replace(cfg.tile_spec, **_typed(TileSpec, tile, "tile"))
    if crack:
        overrides["crack_params"] = replace(cfg.crack_params, **_typed(CrackParams, crack, "crack"))
    cfg = replace(cfg, **overrides)
    cfg.validate()
    return cfg


def parse_config(text: str) -> tuple[SceneConfig, AugmentConfig]:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ParameterError(f"malformed config: {exc}") from exc
    scene = build_scene_config(
        _section(parser, "scene"), _section(parser, "tile"), _section(parser, "crack")
    )
    augment = AugmentConfig(**_typed(AugmentConfig, _section(parser, "augment"), "augment"))
    augment.validate()
    return scene, augment


def load_config(path) -> tuple[SceneConfig, AugmentConfig]:
    return parse_config(Path(path).read_text())


def dump_config(scene: SceneConfig | None = None, augment: AugmentConfig | None = None) -> str:
    """Serialize configs so that :func:`parse_config` reproduces them."""
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    if scene is not None:
        d = asdict(scene)
        tile = d.pop("tile_spec")
        crack = d.pop("crack_params")
        d["spotlights"] = [[s["x"], s["y"], s["radius"], s["intensity"]] for s in d["spotlights"]]
        parser["scene"] = {k: json.dumps(v) for k, v in d.items()}
        parser["tile"] = {k: json.dumps(v) for k, v in tile.items()}
        parser["crack"] = {k: json.dumps(v) for k, v in crack.items()}
    if augment is not None:
        parser["augment"] = {k: json.dumps(v) for k, v in asdict(augment).items()}
    buf = StringIO()
    parser.write(buf)
    return buf.getvalue()
