"""Self-contained HTML rendering of a document with highlighted frames and relation arcs.

Overlapping frames are handled by segment-splitting: the text is partitioned at
every span boundary and each covered segment becomes one highlight element
carrying the ids of all frames over it. Colors come from a stable hash of the
Type attribute into a fixed 12-color palette, so renders are deterministic
across runs (and match the browser workbench, which uses the same hash).
"""

from __future__ import annotations

import html
import json
from string import Template

from .datamodel import IEDocument

PALETTE = (
    "#ffd9a8", "#aee1f7", "#b5e8b0", "#f7b3b3", "#d9c7f0", "#e3cdb9",
    "#f9c6e0", "#e6e6a8", "#b3ecec", "#ffc4a3", "#cfe0a8", "#e0e0e0",
)


def fnv1a(data: bytes) -> int:
    """32-bit FNV-1a; mirrored in the workbench for identical colors."""
    value = 2166136261
    for byte in data:
        value ^= byte
        value = (value * 16777619) & 0xFFFFFFFF
    return value


def color_index(type_value: str) -> int:
    return fnv1a(type_value.encode("utf-8")) % len(PALETTE)


def segment_spans(text: str, frames) -> list[tuple[int, int, list[str]]]:
    """Partition text at all frame boundaries; each segment lists covering frame ids."""
    bounds = {0, len(text)}
    for frame in frames:
        bounds.add(frame.start)
        bounds.add(frame.end)
    ordered = sorted(b for b in bounds if 0 <= b <= len(text))
    segments = []
    for start, end in zip(ordered, ordered[1:]):
        covering = [f.frame_id for f in frames if f.start <= start and end <= f.end]
        segments.append((start, end, covering))
    return segments


def _outermost(frames_by_id: dict, covering: list[str]):
    return min((frames_by_id[fid] for fid in covering),
               key=lambda f: (f.start, -f.end, f.frame_id))


def _tooltip(frames_by_id: dict, covering: list[str]) -> str:
    lines = []
    for fid in covering:
        frame = frames_by_id[fid]
        attrs = ", ".join(f"{k}={v}" for k, v in frame.attributes.items()) or "no attributes"
        lines.append(f"{fid}: {attrs}")
    return "\n".join(lines)


_PAGE = Template("""<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8"/>
<title>$title</title>
<style>
body { font-family: system-ui, sans-serif; margin: 0; background: #fafafa; color: #222; }
header { padding: 10px 16px; border-bottom: 1px solid #ddd; background: #fff; }
header h1 { font-size: 16px; margin: 0; }
header p { margin: 4px 0 0; font-size: 12px; color: #666; }
#viz { position: relative; margin: 16px; }
#arcs { position: absolute; left: 0; top: 0; pointer-events: none; overflow: visible; }
#doc-text { font-family: ui-monospace, monospace; font-size: 14px; line-height: 2.1;
            white-space: pre-wrap; word-wrap: break-word; margin: 0; padding-top: 28px; }
.hl { border-radius: 3px; padding: 1px 2px; border-bottom: 1.5px solid rgba(0,0,0,.35); }
$palette_css
path.arc { fill: none; stroke: #7a7a7a; stroke-width: 1.3px; }
text.arc-label { font-size: 10px; fill: #555; }
</style>
</head>
<body>
<header>
<h1>$title</h1>
<p>$subtitle</p>
</header>
<main id="viz">
<svg id="arcs" width="0" height="0"></svg>
<pre id="doc-text">$body</pre>
</main>
<script type="application/json" id="doc-data">$doc_data</script>
<script>
(function () {
  var data = JSON.parse(document.getElementById('doc-data').textContent);
  var svg = document.getElementById('arcs');
  var host = document.getElementById('viz');
  var SVGNS = 'http://www.w3.org/2000/svg';
  function anchor(frameId) {
    var nodes = document.querySelectorAll('[data-frames]');
    for (var i = 0; i < nodes.length; i++) {
      var ids = nodes[i].getAttribute('data-frames').split(' ');
      if (ids.indexOf(frameId) !== -1) { return nodes[i]; }
    }
    return null;
  }
  function draw() {
    while (svg.firstChild) { svg.removeChild(svg.firstChild); }
    var hostRect = host.getBoundingClientRect();
    svg.setAttribute('width', host.scrollWidth);
    svg.setAttribute('height', host.scrollHeight);
    data.relations.forEach(function (rel) {
      var a = anchor(rel.frame_1_id);
      var b = anchor(rel.frame_2_id);
      if (!a || !b) { return; }
      var ra = a.getBoundingClientRect();
      var rb = b.getBoundingClientRect();
      var x1 = ra.left + ra.width / 2 - hostRect.left;
      var y1 = ra.top - hostRect.top;
      var x2 = rb.left + rb.width / 2 - hostRect.left;
      var y2 = rb.top - hostRect.top;
      var lift = 14 + Math.min(40, Math.abs(x2 - x1) / 10);
      var path = document.createElementNS(SVGNS, 'path');
      path.setAttribute('class', 'arc');
      path.setAttribute('d', 'M ' + x1 + ' ' + y1 +
        ' C ' + x1 + ' ' + (Math.min(y1, y2) - lift) +
        ', ' + x2 + ' ' + (Math.min(y1, y2) - lift) +
        ', ' + x2 + ' ' + y2);
      svg.appendChild(path);
      if (rel.relation_type) {
        var label = document.createElementNS(SVGNS, 'text');
        label.setAttribute('class', 'arc-label');
        label.setAttribute('x', (x1 + x2) / 2);
        label.setAttribute('y', Math.min(y1, y2) - lift + 2);
        label.setAttribute('text-anchor', 'middle');
        label.textContent = rel.relation_type;
        svg.appendChild(label);
      }
    });
  }
  window.addEventListener('load', draw);
  window.addEventListener('resize', draw);
})();
</script>
</body>
</html>
""")


def viz_render(doc: IEDocument) -> str:
    """Render one document as a single self-contained HTML page (no network refs)."""
    frames_by_id = {frame.frame_id: frame for frame in doc.frames}
    parts = []
    for start, end, covering in segment_spans(doc.text, doc.frames):
        segment_text = html.escape(doc.text[start:end])
        if not covering:
            parts.append(segment_text)
            continue
        outer = _outermost(frames_by_id, covering)
        color = color_index(outer.attributes.get("Type", ""))
        attrs_json = html.escape(json.dumps(
            {fid: frames_by_id[fid].attributes for fid in covering},
            ensure_ascii=False), quote=True)
        parts.append(
            f'<span class="hl c{color}"'
            f' data-frames="{html.escape(" ".join(covering), quote=True)}"'
            f' data-attributes="{attrs_json}"'
            f' title="{html.escape(_tooltip(frames_by_id, covering), quote=True)}">'
            f'{segment_text}</span>')

    doc_data = json.dumps({
        "doc_id": doc.doc_id,
        "frames": {
            f.frame_id: {
                "entity_text": f.entity_text,
                "start": f.start,
                "end": f.end,
                "attributes": dict(f.attributes),
            } for f in doc.frames
        },
        "relations": [
            {"frame_1_id": r.frame_1_id, "frame_2_id": r.frame_2_id,
             "relation_type": r.relation_type}
            for r in doc.relations
        ],
    }, ensure_ascii=False).replace("</", "<\\/")  # keep the script block intact

    palette_css = "\n".join(
        f".c{i} {{ background: {color}; }}" for i, color in enumerate(PALETTE))
    return _PAGE.substitute(
        title=html.escape(doc.doc_id, quote=True),
        subtitle=f"{len(doc.frames)} frame(s), {len(doc.relations)} relation(s)",
        palette_css=palette_css,
        body="".join(parts),
        doc_data=doc_data,
    )
