"""Cross-lingual knowledge tables: redirects, interlanguage links, role alignments.

Three plain TSV snapshots replace live knowledge-base access so extraction
is deterministic and runs offline:

    redirects.tsv    lang <TAB> from_uri <TAB> to_uri
    interlang.tsv    lang <TAB> uri <TAB> interlingual_id
    predmatrix.tsv   lang <TAB> predicate_sense <TAB> role_label <TAB> interlingual_role_id

URIs are compared exactly after percent-decoding and space-to-underscore
normalization; there is no fuzzy matching. Redirect chains are resolved at
load time, which is also when cycles are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import unquote

from .errors import ParseError, ResourceError


def normalize_uri(uri: str) -> str:
    return unquote(uri).replace(" ", "_")


@dataclass(frozen=True)
class ResourceTables:
    redirects: dict = field(default_factory=dict)  # uri -> canonical uri, chains resolved
    interlang: dict = field(default_factory=dict)  # canonical uri -> interlingual entity id
    role_matrix: dict = field(default_factory=dict)  # (lang, sense, role) -> interlingual role id

    def resolve_entity(self, uri: str | None) -> str | None:
        """Follow redirects to the canonical URI, then to the shared id.

        Returns None when either hop is missing. Idempotent on canonical
        ids because canonical URIs redirect to themselves.
        """
        if uri is None:
            return None
        canonical = self.redirects.get(normalize_uri(uri), normalize_uri(uri))
        return self.interlang.get(canonical)

    def align_roles(self, lang_a, sense_a, role_a, lang_b, sense_b, role_b) -> bool:
        """True iff both (lang, sense, role) keys map to one interlingual role."""
        a = self.role_matrix.get((lang_a, sense_a, role_a))
        b = self.role_matrix.get((lang_b, sense_b, role_b))
        return a is not None and a == b


def _read_tsv(path, n_fields):
    rows = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != n_fields:
            raise ParseError(f"expected {n_fields} tab-separated fields, got {len(parts)}",
                             line=line_no, source=str(path))
        rows.append((line_no, parts))
    return rows


def load_redirects(path) -> dict:
    raw = {}
    for line_no, (lang, from_uri, to_uri) in _read_tsv(path, 3):
        key = normalize_uri(from_uri)
        value = normalize_uri(to_uri)
        if key in raw and raw[key] != value:
            raise ParseError(f"conflicting redirect for {from_uri!r}", line=line_no, source=str(path))
        raw[key] = value

    resolved = {}
    for start in sorted(raw):
        seen = [start]
        current = start
        while current in raw:
            current = raw[current]
            if current in seen:
                cycle = seen[seen.index(current):]
                raise ResourceError(f"redirect cycle: {' -> '.join(cycle + [current])}")
            seen.append(current)
        for uri in seen:
            resolved[uri] = current
    return resolved


def load_interlang(path) -> dict:
    table = {}
    for line_no, (lang, uri, entity_id) in _read_tsv(path, 3):
        key = normalize_uri(uri)
        if key in table and table[key] != entity_id:
            raise ParseError(f"{uri!r} maps to two interlingual ids", line=line_no, source=str(path))
        table[key] = entity_id
    return table


def load_role_matrix(path) -> dict:
    table = {}
    for line_no, (lang, sense, role, role_id) in _read_tsv(path, 4):
        key = (lang, sense, role)
        if key in table and table[key] != role_id:
            raise ParseError(f"duplicate role-matrix key {key!r}", line=line_no, source=str(path))
        table[key] = role_id
    return table


def load_tables(redirects_path=None, interlang_path=None, predmatrix_path=None) -> ResourceTables:
    """Load whichever tables are given; missing ones stay empty."""
    return ResourceTables(
        redirects=load_redirects(redirects_path) if redirects_path else {},
        interlang=load_interlang(interlang_path) if interlang_path else {},
        role_matrix=load_role_matrix(predmatrix_path) if predmatrix_path else {},
    )
