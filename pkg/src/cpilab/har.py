"""Per-page asset counts and sizes from HTTP Archive (HAR) documents."""

from __future__ import annotations

from dataclasses import dataclass

# Decimal kilobytes, matching common HAR tooling.
KB_BYTES = 1000.0

_EXTENSION_CLASSES = {
    "js": "script",
    "css": "css",
    "png": "image",
    "jpg": "image",
    "gif": "image",
    "svg": "image",
    "html": "text",
    "json": "text",
}

ASSET_CLASSES = ("script", "css", "image", "text", "other")


class MalformedHar(ValueError):
    """The document is not a usable HAR (no parseable log.entries)."""


def classify_asset(url: str, mime_type: str | None = None) -> str:
    """Map a request URL (and optional response MIME type) to an asset class.

    The final path extension decides when it is one of the known ones
    (query string and fragment stripped, case-insensitive); otherwise the
    MIME type is consulted; otherwise the asset is "other".
    """
    if not url:
        raise ValueError("url must be non-empty")
    path = url.split("#", 1)[0].split("?", 1)[0]
    name = path.rsplit("/", 1)[-1]
    if "." in name:
        ext = name.rsplit(".", 1)[-1].lower()
        known = _EXTENSION_CLASSES.get(ext)
        if known:
            return known
    if mime_type:
        mime = mime_type.split(";", 1)[0].strip().lower()
        if "javascript" in mime:
            return "script"
        if mime == "text/css":
            return "css"
        if mime.startswith("image/"):
            return "image"
        if mime in ("text/html", "application/json"):
            return "text"
    return "other"


@dataclass
class PageFeatures:
    """Asset counts and total decimal-KB sizes for one page.

    Every processed entry lands in exactly one class, so the four class
    counts plus ``other_count`` equal the number of processed entries.
    ``skipped_entries`` tallies entries dropped as malformed.
    """

    site_id: str
    css_count: int = 0
    image_count: int = 0
    script_count: int = 0
    text_count: int = 0
    other_count: int = 0
    css_kb: float = 0.0
    image_kb: float = 0.0
    script_kb: float = 0.0
    text_kb: float = 0.0
    skipped_entries: int = 0


def _entry_size(response) -> float:
    content = response.get("content") if isinstance(response, dict) else None
    if isinstance(content, dict):
        size = content.get("size")
        if isinstance(size, (int, float)) and size > 0:
            return float(size)
    if isinstance(response, dict):
        body = response.get("bodySize")
        if isinstance(body, (int, float)) and body > 0:
            return float(body)
    return 0.0


def extract_features(document, site_id: str) -> PageFeatures:
    """Accumulate per-class counts and sizes over a HAR document's entries.

    Sizes prefer the decoded ``response.content.size`` and fall back to
    ``response.bodySize``, then 0. Entries without a usable request URL are
    skipped and counted in ``skipped_entries``.
    """
    if not isinstance(document, dict):
        raise MalformedHar("HAR document is not an object")
    log = document.get("log")
    if not isinstance(log, dict) or not isinstance(log.get("entries"), list):
        raise MalformedHar("HAR document has no log.entries list")

    features = PageFeatures(site_id)
    for entry in log["entries"]:
        if not isinstance(entry, dict):
            features.skipped_entries += 1
            continue
        request = entry.get("request")
        url = request.get("url") if isinstance(request, dict) else None
        if not isinstance(url, str) or not url:
            features.skipped_entries += 1
            continue
        response = entry.get("response") if isinstance(entry.get("response"), dict) else {}
        content = response.get("content") if isinstance(response.get("content"), dict) else {}
        mime = content.get("mimeType") if isinstance(content.get("mimeType"), str) else None

        asset_class = classify_asset(url, mime)
        kb = _entry_size(response) / KB_BYTES
        setattr(features, f"{asset_class}_count", getattr(features, f"{asset_class}_count") + 1)
        if asset_class != "other":
            setattr(features, f"{asset_class}_kb", getattr(features, f"{asset_class}_kb") + kb)
    return features
