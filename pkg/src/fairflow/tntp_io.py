"""File formats: TNTP benchmark files, the native instance JSON, flow CSV.

TNTP is the plain-text format of the classic transportation benchmark
suite: angle-bracket metadata headers, ``~`` comment lines, and
semicolon-terminated link records::

    <NUMBER OF NODES> 24
    <NUMBER OF LINKS> 76
    <END OF METADATA>
    ~ init term capacity length fftime b power speed toll type ;
    1 2 25900.2 6 6 0.15 4 0 0 1 ;

Trips files hold per-origin blocks of ``destination : demand;`` pairs.
Parsing is pure: the same text always yields the same value.

Zone/centroid conventions (the "first through node" restriction) are
ignored: every node is routable.  This is a deliberate reproduction
caveat; the benchmark studies this package follows give no indication
of honoring them.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

from .errors import ParseError, StructureError
from .latency import BPR, latency_from_dict
from .network import Commodity, Edge, Instance, Path, PathFlow

__all__ = [
    "TntpLink",
    "TntpNetFile",
    "TntpTripsFile",
    "parse_net",
    "parse_trips",
    "build_instance",
    "instance_to_dict",
    "instance_from_dict",
    "dump_instance",
    "load_instance",
    "write_path_flow_csv",
    "read_path_flow_csv",
]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TntpLink:
    init_node: int
    term_node: int
    capacity: float
    length: float
    free_flow_time: float
    b: float
    power: float
    speed: float
    toll: float
    link_type: int


@dataclass(frozen=True)
class TntpNetFile:
    zones: int
    nodes: int
    first_thru_node: int
    links: tuple


@dataclass(frozen=True)
class TntpTripsFile:
    zones: int
    total_od_flow: float
    demands: tuple  # ((origin, destination, demand), ...) positive entries only


def _metadata(lines):
    """Consume the metadata header; returns (metadata dict, next line index)."""
    meta = {}
    for idx, (lineno, line) in enumerate(lines):
        text = line.strip()
        if not text or text.startswith("~"):
            continue
        if text.upper().startswith("<END OF METADATA>"):
            return meta, idx + 1
        if text.startswith("<"):
            try:
                key, value = text.split(">", 1)
            except ValueError:
                raise ParseError(f"malformed metadata line {text!r}", line=lineno)
            meta[key[1:].strip().upper()] = value.strip()
        else:
            # some files omit the end marker; first bare record ends the header
            return meta, idx
    return meta, len(lines)


def _meta_int(meta, key, lineno=None):
    if key not in meta:
        raise ParseError(f"missing metadata field <{key}>", line=lineno)
    try:
        return int(float(meta[key]))
    except ValueError:
        raise ParseError(f"metadata field <{key}> is not numeric: {meta[key]!r}")


def parse_net(text):
    """Parse a ``*_net.tntp`` file into its header and link records."""
    lines = list(enumerate(text.splitlines(), start=1))
    meta, start = _metadata(lines)
    zones = _meta_int(meta, "NUMBER OF ZONES")
    nodes = _meta_int(meta, "NUMBER OF NODES")
    links_declared = _meta_int(meta, "NUMBER OF LINKS")
    first_thru = _meta_int(meta, "FIRST THRU NODE") if "FIRST THRU NODE" in meta else 1

    links = []
    for lineno, line in lines[start:]:
        text_line = line.strip()
        if not text_line or text_line.startswith("~") or text_line.startswith("<"):
            continue
        fields = text_line.rstrip(";").split()
        if len(fields) != 10:
            raise ParseError(
                f"link record has {len(fields)} fields, expected 10 "
                "(init term capacity length fftime b power speed toll type)",
                line=lineno,
            )
        try:
            link = TntpLink(
                init_node=int(fields[0]),
                term_node=int(fields[1]),
                capacity=float(fields[2]),
                length=float(fields[3]),
                free_flow_time=float(fields[4]),
                b=float(fields[5]),
                power=float(fields[6]),
                speed=float(fields[7]),
                toll=float(fields[8]),
                link_type=int(float(fields[9])),
            )
        except ValueError as exc:
            raise ParseError(f"non-numeric field in link record: {exc}", line=lineno)
        if not 1 <= link.init_node <= nodes or not 1 <= link.term_node <= nodes:
            raise ParseError(
                f"link references node outside 1..{nodes}: {link.init_node}->{link.term_node}",
                line=lineno,
            )
        if link.capacity <= 0:
            raise ParseError(f"link capacity must be positive, got {link.capacity}", line=lineno)
        if link.free_flow_time < 0:
            raise ParseError(f"free-flow time must be >= 0, got {link.free_flow_time}", line=lineno)
        links.append(link)
    if len(links) != links_declared:
        raise ParseError(f"header declares {links_declared} links but file has {len(links)}")
    return TntpNetFile(zones=zones, nodes=nodes, first_thru_node=first_thru, links=tuple(links))


def parse_trips(text):
    """Parse a ``*_trips.tntp`` file; zero-demand pairs are dropped."""
    lines = list(enumerate(text.splitlines(), start=1))
    meta, start = _metadata(lines)
    zones = _meta_int(meta, "NUMBER OF ZONES")
    total = float(meta.get("TOTAL OD FLOW", "nan"))

    demands = []
    origin = None
    for lineno, line in lines[start:]:
        text_line = line.strip()
        if not text_line or text_line.startswith("~") or text_line.startswith("<"):
            continue
        if text_line.lower().startswith("origin"):
            try:
                origin = int(text_line.split()[1])
            except (IndexError, ValueError):
                raise ParseError(f"malformed origin header {text_line!r}", line=lineno)
            if not 1 <= origin <= zones:
                raise ParseError(f"origin {origin} outside 1..{zones}", line=lineno)
            continue
        if origin is None:
            raise ParseError("demand record before any 'Origin' header", line=lineno)
        for chunk in text_line.split(";"):
            chunk = chunk.strip()
            if not chunk:
                continue
            if ":" not in chunk:
                raise ParseError(f"malformed demand entry {chunk!r}", line=lineno)
            dest_text, demand_text = chunk.split(":", 1)
            try:
                dest = int(dest_text)
                demand = float(demand_text)
            except ValueError:
                raise ParseError(f"non-numeric demand entry {chunk!r}", line=lineno)
            if not 1 <= dest <= zones:
                raise ParseError(f"destination {dest} outside 1..{zones}", line=lineno)
            if demand < 0:
                raise ParseError(f"negative demand {demand} for {origin}->{dest}", line=lineno)
            if demand > 0 and dest != origin:
                demands.append((origin, dest, demand))
    return TntpTripsFile(zones=zones, total_od_flow=total, demands=tuple(demands))


def build_instance(net, trips, bpr_a=None, demand_scale=1.0, name=""):
    """Assemble an instance with BPR latencies from parsed TNTP files.

    Each link becomes ``BPR(free_flow_time, capacity, a, power)``.  By
    default ``a`` is the link's file-supplied coefficient; pass
    ``bpr_a=0.15`` to apply the classic calibration uniformly.  Demands
    can be rescaled with ``demand_scale`` (files do not state their
    units consistently).
    """
    if demand_scale <= 0:
        raise StructureError(f"demand scale must be positive, got {demand_scale}")
    edges = []
    for link in net.links:
        a = link.b if bpr_a is None else bpr_a
        power = link.power
        if float(power) != int(power) or int(power) < 1:
            raise StructureError(f"BPR power must be a positive integer, got {power}")
        edges.append(
            Edge(
                link.init_node - 1,
                link.term_node - 1,
                BPR(xi=link.free_flow_time, kappa=link.capacity, a=a, p=int(power)),
            )
        )
    commodities = []
    for origin, dest, demand in trips.demands:
        if origin > net.nodes or dest > net.nodes:
            raise StructureError(f"trip {origin}->{dest} references node outside the network")
        commodities.append(Commodity(origin - 1, dest - 1, demand * demand_scale))
    return Instance(net.nodes, edges, commodities, name=name)


def instance_to_dict(inst):
    """Native JSON-ready description of an instance."""
    return {
        "schema_version": SCHEMA_VERSION,
        "name": inst.name,
        "num_nodes": inst.num_nodes,
        "edges": [
            {"tail": e.tail, "head": e.head, "latency": e.latency.to_dict()} for e in inst.edges
        ],
        "commodities": [
            {"source": c.source, "sink": c.sink, "rate": c.rate} for c in inst.commodities
        ],
    }


def instance_from_dict(data):
    """Rebuild an instance from the native format; validates on construction."""
    try:
        version = data["schema_version"]
    except (TypeError, KeyError):
        raise ParseError("native instance format needs a schema_version field")
    if version != SCHEMA_VERSION:
        raise ParseError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        edges = [
            Edge(int(e["tail"]), int(e["head"]), latency_from_dict(e["latency"]))
            for e in data["edges"]
        ]
        commodities = [
            Commodity(int(c["source"]), int(c["sink"]), float(c["rate"]))
            for c in data["commodities"]
        ]
        return Instance(int(data["num_nodes"]), edges, commodities, name=data.get("name", ""))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed native instance: {exc!r}")


def dump_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)
        fh.write("\n")


def load_instance(path):
    with open(path) as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON in {path}: {exc}")
    return instance_from_dict(data)


# --- path-flow CSV -----------------------------------------------------------
#
# Columns: path_id, commodity, edges (space-separated edge ids), flow.
# This is the on-disk form of a path decomposition, and the way
# externally constructed decompositions enter the measure pipeline.

PATH_FLOW_COLUMNS = ("path_id", "commodity", "edges", "flow")


def write_path_flow_csv(flow, fh, float_format="{:.12g}"):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(PATH_FLOW_COLUMNS)
    items = sorted(flow.items(), key=lambda kv: (kv[0].commodity, kv[0].edges))
    for path_id, (path, value) in enumerate(items):
        writer.writerow(
            [
                path_id,
                path.commodity,
                " ".join(str(e) for e in path.edges),
                float_format.format(value),
            ]
        )


def read_path_flow_csv(text, inst=None):
    """Parse a path-flow CSV; validates paths against ``inst`` when given."""
    from .network import check_path

    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [c.strip() for c in rows[0]] != list(PATH_FLOW_COLUMNS):
        raise ParseError(f"path-flow CSV must start with header {','.join(PATH_FLOW_COLUMNS)}", line=1)
    flow = PathFlow()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 4:
            raise ParseError(f"path-flow row has {len(row)} fields, expected 4", line=lineno)
        try:
            commodity = int(row[1])
            edges = tuple(int(tok) for tok in row[2].split())
            value = float(row[3])
        except ValueError as exc:
            raise ParseError(f"malformed path-flow row: {exc}", line=lineno)
        if value < 0:
            raise ParseError(f"negative flow {value}", line=lineno)
        path = Path(commodity, edges)
        if inst is not None:
            try:
                check_path(inst, path)
            except StructureError as exc:
                raise ParseError(str(exc), line=lineno)
        flow[path] = flow.get(path, 0.0) + value
    return flow
