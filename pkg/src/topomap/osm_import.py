"""Best-effort import adapter: OSM XML extract -> canonical dataset dict.

Keeps ways carrying a ``highway`` tag, honors ``oneway=yes/-1``, and maps
``maxspeed`` (km/h) when parseable, else a per-class default. POIs are not
part of OSM road extracts; pass them separately or add them to the emitted
dataset afterwards.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET

from .errors import DatasetError

_CLASS_SPEED = {
    "motorway": 90.0, "trunk": 70.0, "primary": 60.0, "secondary": 50.0,
    "tertiary": 40.0, "residential": 30.0, "unclassified": 30.0,
    "service": 20.0, "living_street": 15.0,
}
_DEFAULT_SPEED = 30.0


def _way_tags(el):
    return {t.get("k"): t.get("v") for t in el.findall("tag")}


def osm_to_dataset(xml_text: str, pois=()) -> dict:
    """Convert an OSM XML string to a dataset dict (crs wgs84-degrees)."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as e:
        raise DatasetError(f"OSM XML parse error: {e}") from e

    nodes = {}
    for el in root.findall("node"):
        nid = el.get("id")
        try:
            nodes[nid] = (float(el.get("lon")), float(el.get("lat")))
        except (TypeError, ValueError):
            continue

    used = set()
    ways = []
    for el in root.findall("way"):
        tags = _way_tags(el)
        highway = tags.get("highway")
        if not highway:
            continue
        refs = [nd.get("ref") for nd in el.findall("nd")]
        refs = [r for r in refs if r in nodes]
        if len(refs) < 2:
            continue
        speed = _CLASS_SPEED.get(highway, _DEFAULT_SPEED)
        ms = tags.get("maxspeed", "")
        try:
            speed = float(ms.split()[0]) if ms else speed
        except (ValueError, IndexError):
            pass
        oneway = tags.get("oneway", "no") in ("yes", "1", "true", "-1")
        if tags.get("oneway") == "-1":
            refs = refs[::-1]
        ways.append([el.get("id"), refs, oneway, speed])
        used.update(refs)

    return {
        "crs": "wgs84-degrees",
        "nodes": [[nid, nodes[nid][0], nodes[nid][1]] for nid in sorted(used)],
        "ways": ways,
        "speed_overrides": [],
        "pois": [list(p) for p in pois],
    }
