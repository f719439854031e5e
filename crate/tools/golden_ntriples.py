#!/usr/bin/env python3
"""Independent materializer for the demo fixtures.

Reads a fixture and a mapping document and prints the N-Triples the
mappings produce, one per line, sorted. Shares no code with the Rust
implementation; used to regenerate data/golden/*.nt.

    python3 tools/golden_ntriples.py data/fixtures/sensors.fixture \
        data/mappings/sensors.map > data/golden/sensors.nt
"""

import datetime
import re
import sys
from urllib.parse import quote

XSD = "http://www.w3.org/2001/XMLSchema#"
RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

UNESCAPES = {"\\": "\\", "t": "\t", "n": "\n", "r": "\r"}


def unescape_cell(cell):
    out, i = [], 0
    while i < len(cell):
        if cell[i] == "\\":
            out.append(UNESCAPES[cell[i + 1]])
            i += 2
        else:
            out.append(cell[i])
            i += 1
    return "".join(out)


def parse_cell(kind, cell):
    if cell == "\\N":
        return None
    text = unescape_cell(cell)
    if kind in ("text", "wkt-text"):
        return text
    if kind in ("int64", "epoch-seconds"):
        return int(text)
    if kind == "float64":
        return float(text)
    if kind == "bool":
        return text.strip() in ("true", "t", "1")
    if kind == "text-array":
        return [] if text == "" else text.split("|")
    raise ValueError(kind)


def load_fixture(path):
    tables, current = {}, None
    with open(path, encoding="utf-8") as f:
        for line in f.read().splitlines():
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            keyword, _, rest = line.partition(" ") if " " in line.split("\t")[0] else line.partition("\t")
            if keyword == "table":
                current = {"columns": [], "rows": []}
                tables[rest.strip()] = current
            elif keyword == "col":
                name, kind = rest.split()
                current["columns"].append((name, kind))
            elif keyword == "row":
                cells = rest.split("\t")
                current["rows"].append(
                    {name: parse_cell(kind, c) for (name, kind), c in zip(current["columns"], cells)}
                )
    return tables


def double_text(v):
    if v == 0:
        return "0.0"
    r = repr(v)
    if "e" in r:
        mantissa, exp = r.split("e")
        r = mantissa + "e" + str(int(exp))
    return r


def value_text(v):
    if v is None:
        return None
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return double_text(v)
    if isinstance(v, datetime.datetime):
        return v.strftime("%Y-%m-%dT%H:%M:%SZ")
    return str(v)


SQL = re.compile(r"^SELECT\s+(?P<cols>.+?)\s+FROM\s+(?P<table>\w+)\s*$", re.I)
FUNC = re.compile(r"^(?P<f>\w+)\((?P<col>[\w.]+)\)\s+AS\s+(?P<alias>\w+)$", re.I)


def run_sql(sql, tables):
    m = SQL.match(sql)
    table = m.group("table")
    projections = []
    for item in m.group("cols").split(","):
        item = item.strip()
        fm = FUNC.match(item)
        if fm:
            projections.append((fm.group("f").lower(), fm.group("col").split(".")[-1], fm.group("alias")))
        else:
            projections.append(("col", item.split(".")[-1], item))
    rows = []
    for row in tables[table]["rows"]:
        arrays = [row[c] or [] for f, c, _ in projections if f == "unnest"]
        repeat = max((len(a) for a in arrays), default=1) if arrays else 1
        for k in range(repeat):
            out = {}
            for f, c, name in projections:
                v = row[c]
                if f == "to_timestamp":
                    v = None if v is None else datetime.datetime.fromtimestamp(v, datetime.timezone.utc)
                elif f == "unnest":
                    v = v[k] if v is not None and k < len(v) else None
                out[name] = v
            rows.append(out)
    return rows


def load_mappings(path):
    prefixes, mappings, current = {}, [], {}
    with open(path, encoding="utf-8") as f:
        for line in f.read().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            keyword, _, rest = line.partition(" ")
            if keyword == "prefix":
                name, iri = rest.split(None, 1)
                prefixes[name.rstrip(":")] = iri.strip()[1:-1]
            elif keyword == "mappingId":
                current = {"id": rest}
            elif keyword == "target":
                current["target"] = rest
            elif keyword == "source":
                current["source"] = rest
                mappings.append(current)
    return prefixes, mappings


def expand_name(token, prefixes):
    if token == "a":
        return RDF_TYPE
    if token.startswith("<"):
        return token[1:-1]
    prefix, _, local = token.partition(":")
    return prefixes[prefix] + local


def render(template, row, encode):
    out = []
    for part in re.split(r"(\{[^}]+\})", template):
        if part.startswith("{"):
            text = value_text(row.get(part[1:-1]))
            if text is None:
                return None
            out.append(quote(text, safe="") if encode else text)
        else:
            out.append(part)
    return "".join(out)


def canonical(text, datatype):
    if datatype == XSD + "double":
        return double_text(float(text))
    if datatype == XSD + "integer":
        return str(int(text))
    return text


def escape_literal(s):
    out = []
    for ch in s:
        code = ord(ch)
        if ch == '"':
            out.append('\\"')
        elif ch == "\\":
            out.append("\\\\")
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\b":
            out.append("\\b")
        elif ch == "\f":
            out.append("\\f")
        elif code < 0x20 or code == 0x7F:
            out.append("\\u%04X" % code)
        else:
            out.append(ch)
    return "".join(out)


TARGET = re.compile(r'^(?P<s>\S+)\s+(?P<p>\S+)\s+(?P<o>"[^"]*"\^\^\S+|\S+)\s*\.$')


def materialize(fixture, mapping_doc):
    tables = load_fixture(fixture)
    prefixes, mappings = load_mappings(mapping_doc)
    lines = set()
    for m in mappings:
        t = TARGET.match(m["target"])
        subject_t = expand_name(t.group("s"), prefixes)
        predicate = expand_name(t.group("p"), prefixes)
        obj = t.group("o")
        for row in run_sql(m["source"], tables):
            subject = render(subject_t, row, True)
            if subject is None:
                continue
            if obj.startswith('"'):
                lexical_t, _, dt = obj[1:].partition('"^^')
                text = render(lexical_t, row, False)
                if text is None:
                    continue
                o = '"%s"^^<%s>' % (escape_literal(canonical(text, expand_name(dt, prefixes))), expand_name(dt, prefixes))
            else:
                iri = render(expand_name(obj, prefixes), row, True)
                if iri is None:
                    continue
                o = "<%s>" % iri
            lines.add("<%s> <%s> %s ." % (subject, predicate, o))
    return sorted(lines)


def main(argv):
    if len(argv) != 3:
        sys.stderr.write(__doc__)
        return 2
    out = sys.stdout
    for line in materialize(argv[1], argv[2]):
        out.write(line + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
