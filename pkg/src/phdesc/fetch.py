"""Optional download of a published structure archive.

Nothing in the core pipeline depends on this module. Set ``PHDESC_ENABLE_FETCH=1``
to enable the ``fetch`` command-line subcommand.
"""

from __future__ import annotations

import hashlib
import logging
import os
import shutil
import tarfile
import urllib.error
import urllib.request
import zipfile

from .errors import FetchError

log = logging.getLogger(__name__)

FEATURE_FLAG = "PHDESC_ENABLE_FETCH"


def fetch_enabled() -> bool:
    return os.environ.get(FEATURE_FLAG, "") not in ("", "0", "false", "no")


def sha256sum(path, chunk=1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(chunk), b""):
            h.update(block)
    return h.hexdigest()


def fetch_dataset(url, destination, sha256=None, offline=False, timeout=60.0):
    """Download ``url`` to ``destination`` (a file path or an existing directory).

    An existing file whose checksum matches is reused. On checksum mismatch the
    partial download is removed and a :class:`FetchError` raised. With
    ``offline`` nothing is attempted and ``None`` is returned.
    """
    if os.path.isdir(destination):
        name = os.path.basename(urllib.request.urlparse(url).path) or "dataset.archive"
        destination = os.path.join(destination, name)
    if offline:
        log.warning("offline mode: skipping download of %s", url)
        return None
    if os.path.exists(destination) and sha256 and sha256sum(destination) == sha256.lower():
        log.info("using cached %s", destination)
        return destination
    part = destination + ".part"
    try:
        with urllib.request.urlopen(url, timeout=timeout) as resp, open(part, "wb") as out:
            shutil.copyfileobj(resp, out)
    except (urllib.error.URLError, OSError) as exc:
        if os.path.exists(part):
            os.unlink(part)
        raise FetchError(f"download of {url} failed: {exc}", retryable=True) from exc
    if sha256:
        got = sha256sum(part)
        if got != sha256.lower():
            os.unlink(part)
            raise FetchError(f"checksum mismatch for {url}: expected {sha256}, got {got}", retryable=True)
    os.replace(part, destination)
    return destination


def sniff_archive(path) -> str:
    """``"zip"``, ``"tar"``, ``"extxyz"`` or ``"unknown"``."""
    if zipfile.is_zipfile(path):
        return "zip"
    try:
        if tarfile.is_tarfile(path):
            return "tar"
    except OSError:
        pass
    try:
        with open(path, encoding="utf-8") as fh:
            first = fh.readline().strip()
            second = fh.readline()
        if first.isdigit() and "Lattice=" in second:
            return "extxyz"
    except (UnicodeDecodeError, OSError):
        pass
    return "unknown"


def load_archive_structures(path, workdir):
    """Best-effort: extract ``path`` and parse every extended-XYZ member found.

    Members that fail to parse are logged and skipped.
    """
    from .io import read_extxyz

    kind = sniff_archive(path)
    if kind == "extxyz":
        return read_extxyz(path)
    if kind == "zip":
        with zipfile.ZipFile(path) as zf:
            zf.extractall(workdir)
    elif kind == "tar":
        with tarfile.open(path) as tf:
            tf.extractall(workdir, filter="data")
    else:
        raise FetchError(f"{path}: unrecognized archive format", retryable=False)
    out = []
    for root, _, files in sorted(os.walk(workdir)):
        for name in sorted(files):
            member = os.path.join(root, name)
            if sniff_archive(member) != "extxyz":
                continue
            try:
                out.extend(read_extxyz(member))
            except Exception as exc:  # noqa: BLE001 - best effort over unknown content
                log.warning("skipping %s: %s", member, exc)
    return out
