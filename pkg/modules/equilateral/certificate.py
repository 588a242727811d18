import json
import re
from dataclasses import dataclass, field
from fractions import Fraction

from utils.linalg.exactlin import format_rational, parse_rational


class CertificateFormatError(ValueError):
    pass


LINF = {'kind': 'linf'}


@dataclass
class EquilateralCertificate:
    """
    A point set claimed c-equilateral under ``norm``.

    ``norm`` is one of ``{"kind": "linf"}``, ``{"kind": "polytopal", "normals": [...]}`` or
    ``{"kind": "perturbed", "norm": {...}, "tolerance": "p/q"}``.
    """
    points: list
    c: Fraction
    norm: dict
    source: dict
    evidence: list = field(default_factory=list)
    stability_checks: list = field(default_factory=list)
    audit: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.points)

    @property
    def dim(self):
        return len(self.points[0]) if self.points else 0

    def to_json(self):
        return {
            'size': self.size,
            'c': format_rational(self.c),
            'norm': self.norm,
            'points': [[format_rational(q) for q in p] for p in self.points],
            'source': self.source,
            'evidence': self.evidence,
            'stability_checks': self.stability_checks,
            'audit': self.audit,
        }

    @classmethod
    def from_json(cls, obj):
        try:
            points = [tuple(parse_rational(q) for q in p) for p in obj['points']]
            cert = cls(points, parse_rational(obj['c']), obj['norm'], obj.get('source', {}),
                       obj.get('evidence', []), obj.get('stability_checks', []), obj.get('audit', {}))
        except (KeyError, TypeError, ValueError) as e:
            raise CertificateFormatError(f"malformed certificate: {e}")
        if 'size' in obj and obj['size'] != cert.size:
            raise CertificateFormatError(f"certificate says size {obj['size']} but lists {cert.size} points")
        if len({len(p) for p in points}) > 1:
            raise CertificateFormatError("points of different lengths")
        return cert


def dumps(obj):
    # one list of scalars per line
    return re.sub(r'\n\s+("[^"\n]*"|-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?|true|false|null|\])(?=,?\n)', r' \1',
                  json.dumps(obj, sort_keys=True, indent=1)) + '\n'


def save_certificate(cert, path):
    with open(path, 'w') as f:
        f.write(dumps(cert.to_json()))


def load_certificate(path):
    with open(path) as f:
        return EquilateralCertificate.from_json(json.load(f))


def zero_point(n):
    return tuple(Fraction(0) for _ in range(n))
