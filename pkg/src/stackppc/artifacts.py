"""Artifact files: deterministic CSV/JSON writers and schema validation."""
from __future__ import annotations

import csv
import io
import json
import os
import xml.etree.ElementTree as ET
from importlib import resources

import jsonschema
import numpy as np

from ._util import atomic_write_text, dump_json, fmt17


class ArtifactError(RuntimeError):
    pass


def load_schema(name: str) -> dict:
    text = resources.files("stackppc").joinpath("schemas", f"{name}.schema.json").read_text("utf-8")
    return json.loads(text)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "" if np.isnan(v) else fmt17(v)
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _parse_cell(s: str):
    if s == "":
        return None
    for cast in (int, float):
        try:
            return cast(s)
        except ValueError:
            pass
    return s


def read_csv_records(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        return [dict(zip(header, (_parse_cell(c) for c in row))) for row in reader]


def validate_file(path, schema: str | None) -> None:
    """Check one output file against its shipped schema (SVG/HTML: well-formed XML)."""
    path = os.fspath(path)
    try:
        if path.endswith(".json"):
            with open(path, encoding="utf-8") as fh:
                jsonschema.validate(json.load(fh), load_schema(schema))
        elif path.endswith(".csv"):
            with open(path, newline="", encoding="utf-8") as fh:
                header = next(csv.reader(fh))
            if len(set(header)) != len(header):
                raise ArtifactError(f"{path}: duplicate CSV column names")
            jsonschema.validate(read_csv_records(path), load_schema(schema))
        elif path.endswith((".svg", ".html")):
            ET.parse(path)
        else:
            raise ArtifactError(f"{path}: no validator for this file type")
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ArtifactError(f"{path}: schema {schema!r} violated at {where}: {exc.message}") from None
    except ET.ParseError as exc:
        raise ArtifactError(f"{path}: malformed markup: {exc}") from None


class ArtifactWriter:
    """Writes files under ``root`` atomically and remembers which schema applies."""

    def __init__(self, root):
        self.root = os.fspath(root)
        self.written: list[tuple[str, str | None]] = []

    def path(self, rel: str) -> str:
        return os.path.join(self.root, rel)

    def _record(self, rel, schema):
        self.written.append((rel, schema))
        return self.path(rel)

    def json(self, rel: str, obj, schema: str) -> str:
        path = self._record(rel, schema)
        atomic_write_text(path, dump_json(obj))
        return path

    def csv(self, rel: str, header, rows, schema: str) -> str:
        path = self._record(rel, schema)
        atomic_write_text(path, csv_text(header, rows))
        return path

    def csv_text(self, rel: str, text: str, schema: str) -> str:
        path = self._record(rel, schema)
        atomic_write_text(path, text)
        return path

    def text(self, rel: str, text: str) -> str:
        path = self._record(rel, None)
        atomic_write_text(path, text)
        return path

    def validate(self) -> None:
        for rel, schema in self.written:
            validate_file(self.path(rel), schema)
