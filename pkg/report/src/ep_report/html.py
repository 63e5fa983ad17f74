"""Static HTML index linking the rendered figures and key run scalars.
No timestamps or machine-specific content: identical inputs give identical
bytes."""

from __future__ import annotations

import html
import os


def _scalar_rows(manifest):
    if not manifest:
        return ""
    rows = []
    for key in ("config_hash", "status"):
        if key in manifest:
            rows.append((key, str(manifest[key])))
    for key, val in sorted((manifest.get("scalars") or {}).items()):
        if val is not None:
            rows.append((key, f"{val:.9g}" if isinstance(val, float) else str(val)))
    return "\n".join(
        f"<tr><td>{html.escape(k)}</td><td><code>{html.escape(v)}</code></td></tr>"
        for k, v in rows)


def write_index(spec, records, warnings, manifest, sweep_index):
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'><title>run report</title>",
        "<style>body{font-family:sans-serif;max-width:860px;margin:2em auto;}"
        "img{max-width:100%;border:1px solid #ccc;margin:0.4em 0;}"
        "table{border-collapse:collapse;}td{border:1px solid #ccc;"
        "padding:2px 8px;}</style></head><body>",
        f"<h1>Report: {html.escape(os.path.basename(os.path.abspath(spec.run_dir)))}</h1>",
    ]
    if sweep_index is not None:
        eps = ", ".join(f"{e:g}" for e in sweep_index.get("eps", []))
        parts.append(f"<p>sweep over eps = {html.escape(eps)}</p>")
        if manifest is None and "config_hash" in sweep_index:
            manifest = {"config_hash": sweep_index["config_hash"]}
    scalars = _scalar_rows(manifest)
    if scalars:
        parts.append("<h2>Key scalars</h2><table>" + scalars + "</table>")
    if warnings:
        parts.append("<h2>Warnings</h2><ul>")
        parts += [f"<li>{html.escape(w)}</li>" for w in warnings]
        parts.append("</ul>")
    parts.append("<h2>Figures</h2>")
    rendered = {r.filename for r in records}
    for rec in records:
        if os.path.exists(os.path.join(spec.out_dir, rec.filename)):
            parts.append(f"<h3>{html.escape(rec.name)}</h3>")
            parts.append(f"<img src='{html.escape(rec.filename)}' "
                         f"alt='{html.escape(rec.name)}'>")
    parts.append("</body></html>")
    path = os.path.join(spec.out_dir, "index.html")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(parts) + "\n")
    return path
