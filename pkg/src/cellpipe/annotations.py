"""CSV annotation listing and LabelImg-style (Pascal VOC) XML import.

The CSV canonical form is pinned so output is byte-deterministic:

* header line ``filename,width,height,class,xmin,ymin,xmax,ymax``;
* one row per labeled region, integer coordinates (min corner floored,
  max corner ceiled);
* rows sorted by (filename, ymin, xmin, class, xmax, ymax);
* LF line endings, trailing newline.

Corner convention is documented in :mod:`cellpipe.model`: the max corner
is exclusive, so a full-image box reads ``0,0,width,height``.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET

from .model import (
    Annotation,
    BoundingBox,
    CellClass,
    Dataset,
    FormatError,
    ImageRecord,
)

CSV_HEADER = "filename,width,height,class,xmin,ymin,xmax,ymax"

#: colorspace recorded for images introduced via CSV, which carries none.
DEFAULT_CSV_COLORSPACE = "rgb"


def _parse_int(field: str, what: str, line_no: int) -> int:
    try:
        return int(field.strip())
    except ValueError:
        raise FormatError(f"non-integer {what} {field!r} at line {line_no}") from None


def parse_csv(text: str, colorspaces: dict[str, str] | None = None) -> Dataset:
    """Parse a CSV annotation listing into a Dataset.

    An optional single header line is skipped. Image records are
    deduplicated by filename; the filename doubles as the image id.
    ``colorspaces`` optionally assigns a colorspace per filename
    (defaults to rgb).

    Raises FormatError, with the offending line number, for: wrong field
    count, non-integer values, unknown class names, boxes outside the
    image or with non-positive area, size mismatches between rows of the
    same file, and exact duplicate rows.
    """
    colorspaces = colorspaces or {}
    images: dict[str, ImageRecord] = {}
    annotations: list[Annotation] = []
    seen_rows: set[str] = set()

    lines = text.split("\n")
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line_no == 1 and line == CSV_HEADER:
            continue
        fields = line.split(",")
        if len(fields) != 8:
            raise FormatError(f"expected 8 fields, got {len(fields)} at line {line_no}")
        filename = fields[0].strip()
        if not filename:
            raise FormatError(f"empty filename at line {line_no}")
        width = _parse_int(fields[1], "width", line_no)
        height = _parse_int(fields[2], "height", line_no)
        try:
            label = CellClass.from_token(fields[3])
        except FormatError:
            raise FormatError(f"unknown class {fields[3]!r} at line {line_no}") from None
        xmin = _parse_int(fields[4], "xmin", line_no)
        ymin = _parse_int(fields[5], "ymin", line_no)
        xmax = _parse_int(fields[6], "xmax", line_no)
        ymax = _parse_int(fields[7], "ymax", line_no)

        if line in seen_rows:
            raise FormatError(f"duplicate row at line {line_no}: {line!r}")
        seen_rows.add(line)

        if width < 1 or height < 1:
            raise FormatError(f"non-positive image size at line {line_no}")
        if xmin >= xmax or ymin >= ymax:
            raise FormatError(f"zero-area box at line {line_no}")
        if xmin < 0 or ymin < 0 or xmax > width or ymax > height:
            raise FormatError(f"box outside image at line {line_no}")

        existing = images.get(filename)
        if existing is None:
            images[filename] = ImageRecord(
                image_id=filename,
                file_path=filename,
                width=width,
                height=height,
                colorspace=colorspaces.get(filename, DEFAULT_CSV_COLORSPACE),
            )
        elif existing.width != width or existing.height != height:
            raise FormatError(
                f"inconsistent size for {filename!r} at line {line_no}: "
                f"{width}x{height} vs {existing.width}x{existing.height}"
            )
        annotations.append(
            Annotation(
                image_id=filename,
                box=BoundingBox(float(xmin), float(ymin), float(xmax), float(ymax)),
                label=label,
            )
        )

    return Dataset(images=tuple(images.values()), annotations=tuple(annotations))


def _csv_row(rec: ImageRecord, ann: Annotation) -> tuple:
    xmin = math.floor(ann.box.xmin)
    ymin = math.floor(ann.box.ymin)
    xmax = math.ceil(ann.box.xmax)
    ymax = math.ceil(ann.box.ymax)
    return (rec.image_id, rec.width, rec.height, ann.label.token, xmin, ymin, xmax, ymax)


def write_csv(dataset: Dataset) -> str:
    """Serialize a Dataset to the canonical CSV form (byte-deterministic)."""
    rows = [_csv_row(dataset.image(a.image_id), a) for a in dataset.annotations]
    rows.sort(key=lambda r: (r[0], r[5], r[4], r[3], r[7], r[6]))
    lines = [CSV_HEADER]
    lines.extend(",".join(str(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _require(elem: ET.Element | None, name: str) -> ET.Element:
    if elem is None:
        raise FormatError(f"missing <{name}> element")
    return elem


def _elem_int(parent: ET.Element, name: str) -> int:
    child = _require(parent.find(name), name)
    text = (child.text or "").strip()
    try:
        # LabelImg sometimes writes float-looking integers
        value = float(text)
    except ValueError:
        raise FormatError(f"non-numeric <{name}>: {text!r}") from None
    if value != int(value):
        raise FormatError(f"non-integer <{name}>: {text!r}")
    return int(value)


def import_voc_xml(
    doc: str, image_size_override: tuple[int, int] | None = None
) -> tuple[ImageRecord, list[Annotation]]:
    """Import one LabelImg/Pascal-VOC XML document.

    Returns the image record plus one annotation per ``<object>``. Class
    names are matched case-sensitively after trimming whitespace.
    ``image_size_override`` replaces the XML's (width, height) when the
    file header is known to be wrong.
    """
    try:
        root = ET.fromstring(doc)
    except ET.ParseError as exc:
        raise FormatError(f"malformed XML: {exc}") from None

    filename = (_require(root.find("filename"), "filename").text or "").strip()
    if not filename:
        raise FormatError("empty <filename>")

    if image_size_override is not None:
        width, height = image_size_override
        depth = 3
    else:
        size = _require(root.find("size"), "size")
        width = _elem_int(size, "width")
        height = _elem_int(size, "height")
        depth_elem = size.find("depth")
        depth = _elem_int(size, "depth") if depth_elem is not None else 3

    record = ImageRecord(
        image_id=filename,
        file_path=filename,
        width=width,
        height=height,
        colorspace="rgb" if depth == 3 else "mono",
    )

    annotations: list[Annotation] = []
    for obj in root.findall("object"):
        name = (_require(obj.find("name"), "name").text or "").strip()
        label = CellClass.from_token(name)
        bndbox = _require(obj.find("bndbox"), "bndbox")
        xmin = _elem_int(bndbox, "xmin")
        ymin = _elem_int(bndbox, "ymin")
        xmax = _elem_int(bndbox, "xmax")
        ymax = _elem_int(bndbox, "ymax")
        if xmin >= xmax or ymin >= ymax:
            raise FormatError(f"zero-area box in object {name!r}")
        box = BoundingBox(float(xmin), float(ymin), float(xmax), float(ymax))
        if not box.within(width, height):
            raise FormatError(f"box outside image in object {name!r}")
        annotations.append(Annotation(image_id=filename, box=box, label=label))

    return record, annotations


def dataset_from_voc_files(docs) -> Dataset:
    """Build a Dataset out of several VOC XML documents (one per image)."""
    images: list[ImageRecord] = []
    annotations: list[Annotation] = []
    for doc in docs:
        record, anns = import_voc_xml(doc)
        images.append(record)
        annotations.extend(anns)
    return Dataset(images=tuple(images), annotations=tuple(annotations))
