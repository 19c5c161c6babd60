#!/usr/bin/env python3
"""Independent OOXML presentation checker (standard library only).

Opens each given .pptx the way a strict consumer would: verifies the ZIP
container, parses [Content_Types].xml, walks every relationship part,
resolves every relationship target to a real archive entry, follows the
package -> presentation -> slide -> layout -> master chain, and parses every
XML part along the way. Exits 0 iff every file passes; prints one line per
file. Any condition that would send a desktop application into "repair"
territory (missing parts, dangling relationships, malformed XML, uncovered
content types) is reported as a failure.

Usage: pptx_check.py deck.pptx [more.pptx ...]
"""
import posixpath
import sys
import xml.etree.ElementTree as ET
import zipfile

CT_NS = "{http://schemas.openxmlformats.org/package/2006/content-types}"
REL_NS = "{http://schemas.openxmlformats.org/package/2006/relationships}"
R_NS = "{http://schemas.openxmlformats.org/officeDocument/2006/relationships}"
P_NS = "{http://schemas.openxmlformats.org/presentationml/2006/main}"

OFFICE_DOCUMENT_REL = (
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/officeDocument"
)
SLIDE_REL = "http://schemas.openxmlformats.org/officeDocument/2006/relationships/slide"
LAYOUT_REL = (
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/slideLayout"
)
MASTER_REL = (
    "http://schemas.openxmlformats.org/officeDocument/2006/relationships/slideMaster"
)


class CheckFailure(Exception):
    pass


def rels_path_for(part):
    """_rels sibling of a part: ppt/slides/slide1.xml -> ppt/slides/_rels/slide1.xml.rels."""
    directory, name = posixpath.split(part)
    return posixpath.join(directory, "_rels", name + ".rels")


def resolve_target(source_part, target):
    """Resolve a relationship target relative to its source part."""
    if target.startswith("/"):
        return target.lstrip("/")
    base = posixpath.dirname(source_part)
    return posixpath.normpath(posixpath.join(base, target))


def parse_xml(zf, name):
    try:
        data = zf.read(name)
    except KeyError:
        raise CheckFailure(f"missing part {name}")
    try:
        return ET.fromstring(data)
    except ET.ParseError as exc:
        raise CheckFailure(f"malformed XML in {name}: {exc}")


def load_rels(zf, part, names):
    """Relationships of `part` as {rId: (type, resolved_target)}; verifies targets exist."""
    rels_name = rels_path_for(part if part else "")
    if part == "":
        rels_name = "_rels/.rels"
    if rels_name not in names:
        return {}
    root = parse_xml(zf, rels_name)
    rels = {}
    for rel in root.findall(f"{REL_NS}Relationship"):
        rid = rel.get("Id")
        rtype = rel.get("Type")
        target = rel.get("Target")
        mode = rel.get("TargetMode", "Internal")
        if rid is None or rtype is None or target is None:
            raise CheckFailure(f"{rels_name}: relationship missing Id/Type/Target")
        if rid in rels:
            raise CheckFailure(f"{rels_name}: duplicate relationship id {rid}")
        if mode == "External":
            rels[rid] = (rtype, None)
            continue
        resolved = resolve_target(part, target)
        if resolved not in names:
            raise CheckFailure(
                f"{rels_name}: relationship {rid} targets missing part {resolved}"
            )
        rels[rid] = (rtype, resolved)
    return rels


def check_content_types(zf, names):
    """Every part must be covered by a Default extension or an Override."""
    root = parse_xml(zf, "[Content_Types].xml")
    defaults = {}
    overrides = {}
    for child in root:
        if child.tag == f"{CT_NS}Default":
            ext = child.get("Extension")
            ct = child.get("ContentType")
            if not ext or not ct:
                raise CheckFailure("[Content_Types].xml: Default missing attributes")
            defaults[ext.lower()] = ct
        elif child.tag == f"{CT_NS}Override":
            part = child.get("PartName")
            ct = child.get("ContentType")
            if not part or not ct:
                raise CheckFailure("[Content_Types].xml: Override missing attributes")
            if part in overrides:
                raise CheckFailure(f"[Content_Types].xml: duplicate override {part}")
            overrides[part] = ct
    for name in names:
        if name == "[Content_Types].xml":
            continue
        if "/" + name in overrides:
            continue
        ext = name.rsplit(".", 1)[-1].lower() if "." in name else ""
        if ext not in defaults:
            raise CheckFailure(f"part {name} has no content type (extension {ext!r})")
    return overrides


def check_pptx(path):
    try:
        zf = zipfile.ZipFile(path)
    except (zipfile.BadZipFile, OSError) as exc:
        raise CheckFailure(f"not a readable ZIP archive: {exc}")
    with zf:
        corrupt = zf.testzip()
        if corrupt is not None:
            raise CheckFailure(f"CRC mismatch in {corrupt}")
        names = set(zf.namelist())

        overrides = check_content_types(zf, names)

        package_rels = load_rels(zf, "", names)
        doc_parts = [t for (rtype, t) in package_rels.values() if rtype == OFFICE_DOCUMENT_REL]
        if len(doc_parts) != 1 or doc_parts[0] is None:
            raise CheckFailure("package must have exactly one officeDocument relationship")
        presentation = doc_parts[0]

        pres_root = parse_xml(zf, presentation)
        pres_rels = load_rels(zf, presentation, names)

        # Every r:id the presentation references must resolve.
        slide_count = 0
        for sld_id in pres_root.iter(f"{P_NS}sldId"):
            rid = sld_id.get(f"{R_NS}id")
            if rid not in pres_rels:
                raise CheckFailure(f"{presentation}: dangling slide relationship {rid}")
            rtype, slide_part = pres_rels[rid]
            if rtype != SLIDE_REL or slide_part is None:
                raise CheckFailure(f"{presentation}: {rid} is not an internal slide relationship")
            slide_count += 1
            check_slide(zf, names, slide_part)

        masters = [t for (rtype, t) in pres_rels.values() if rtype == MASTER_REL]
        if not masters:
            raise CheckFailure(f"{presentation}: no slide master relationship")
        for master in masters:
            parse_xml(zf, master)
            load_rels(zf, master, names)

        # Parse every XML part in the archive, referenced or not.
        for name in sorted(names):
            if name.endswith(".xml") or name.endswith(".rels"):
                parse_xml(zf, name)

        return slide_count, len(overrides)


def check_slide(zf, names, slide_part):
    root = parse_xml(zf, slide_part)
    rels = load_rels(zf, slide_part, names)

    layouts = [t for (rtype, t) in rels.values() if rtype == LAYOUT_REL]
    if len(layouts) != 1:
        raise CheckFailure(f"{slide_part}: expected exactly one slideLayout relationship")
    layout = layouts[0]
    layout_rels = load_rels(zf, layout, names)
    parse_xml(zf, layout)
    masters = [t for (rtype, t) in layout_rels.values() if rtype == MASTER_REL]
    if len(masters) != 1:
        raise CheckFailure(f"{layout}: expected exactly one slideMaster relationship")
    parse_xml(zf, masters[0])

    # Every r:embed / r:id used anywhere in the slide must resolve.
    for elem in root.iter():
        for attr in (f"{R_NS}embed", f"{R_NS}id", f"{R_NS}link"):
            rid = elem.get(attr)
            if rid is not None and rid not in rels:
                raise CheckFailure(f"{slide_part}: dangling reference {rid}")


def main(argv):
    if len(argv) < 2:
        print("usage: pptx_check.py deck.pptx [more.pptx ...]", file=sys.stderr)
        return 2
    failures = 0
    for path in argv[1:]:
        try:
            slides, overrides = check_pptx(path)
            print(f"OK {path}: {slides} slide(s), {overrides} typed part(s)")
        except CheckFailure as exc:
            failures += 1
            print(f"FAIL {path}: {exc}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
