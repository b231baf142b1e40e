"""Grid scans over the shape triangle.

The grid is a set of vertical lines ``x_i`` spaced ``dx`` apart; on each line
``points_per_line`` points are spread uniformly in ``t = y/x`` over the part
of the line inside the window.  Point ``(i, j)`` neighbours ``(i +- 1, j)``
and ``(i, j +- 1)``.  Rows are always emitted in ``(i, j)`` order, so serial
and parallel runs write identical files.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields

import numpy as np

from . import classify as cl
from . import families as fam
from . import normalform as nfm
from . import reduced as red
from .geometry import DomainError, semiaxes_from_xy
from .polyalg import ResonanceError

FLOAT_FMT = "{:.17g}"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    type: str = "I"
    branch: str = "PlusMinus"
    dx: float = 0.005
    points_per_line: int = 60
    xmin: float = 0.0
    xmax: float = 1.0
    ymin: float = 0.0
    ymax: float = 1.0
    points: tuple = ()
    margin: float = 1e-3
    tol_ell: float = red.TOL_ELL
    res_tol: float = 1e-6
    classify_tol: float = cl.CLASSIFY_TOL
    n_theta: int = cl.N_THETA
    g: float = 1.0
    max_order: int = 4
    spectra_stride: int = 0
    spectra_samples: int = 400
    spectral_tol: float = nfm.SPECTRAL_TOL
    bisect: int = 0
    jobs: int = 1
    output: str = "-"
    svg: str = ""
    curves: str = ""
    generic_set: str = ""

    def __post_init__(self):
        try:
            fam.EllipsoidType(self.type)
            fam.Branch(self.branch)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.dx > 0:
            raise ConfigError("dx must be positive")
        if self.points_per_line < 1:
            raise ConfigError("points_per_line must be at least 1")
        for name in ("tol_ell", "res_tol", "classify_tol", "g", "spectral_tol"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if self.spectra_stride < 0 or self.spectra_samples < 1:
            raise ConfigError("spectra_stride >= 0 and spectra_samples >= 1 required")
        if self.n_theta < 3 or self.jobs < 1 or not 1 <= self.max_order <= 4:
            raise ConfigError("n_theta >= 3, jobs >= 1 and 1 <= max_order <= 4 required")
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ConfigError("empty scan window")
        if self.generic_set:
            _parse_generic_set(self.generic_set)

    @property
    def kind(self) -> fam.EllipsoidType:
        return fam.EllipsoidType(self.type)

    @classmethod
    def field_types(cls):
        return {f.name: f.type for f in fields(cls)}


def _coerce(name, value):
    default = getattr(ScanConfig(), name)
    if isinstance(default, bool):
        return str(value).lower() in ("1", "true", "yes")
    if isinstance(default, int):
        return int(value)
    if isinstance(default, float):
        return float(value)
    if isinstance(default, tuple):
        return tuple(value) if not isinstance(value, str) else _parse_points_text(value)
    return str(value)


def _parse_points_text(text):
    pts = []
    for chunk in text.replace(";", "\n").splitlines():
        chunk = chunk.strip()
        if chunk and not chunk.startswith("#"):
            x, y = (float(v) for v in chunk.replace(",", " ").split())
            pts.append((x, y))
    return tuple(pts)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes equal underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_config(file_values: dict, flag_values: dict) -> ScanConfig:
    """Merge defaults, config-file values and flags (flags win)."""
    known = set(ScanConfig.field_types())
    merged = {}
    for source in (file_values, flag_values):
        for key, value in source.items():
            if value is None:
                continue
            if key not in known:
                raise ConfigError(f"unknown configuration key {key!r}")
            try:
                merged[key] = _coerce(key, value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from None
    return ScanConfig(**merged)


# ---------------------------------------------------------------------------
# grid


@dataclass(frozen=True)
class GridPoint:
    i: int
    j: int
    x: float
    y: float


def grid_points(cfg: ScanConfig):
    if cfg.points:
        return [GridPoint(k, 0, float(x), float(y)) for k, (x, y) in enumerate(cfg.points)]
    pts = []
    n_lines = int(math.floor((cfg.xmax - cfg.xmin) / cfg.dx + 1e-9))
    for i in range(n_lines):
        x = cfg.xmin + (i + 0.5) * cfg.dx
        lo, hi = max(cfg.ymin, 0.0), min(cfg.ymax, x)
        if not lo < hi or not 0 < x < 1:
            continue
        n = cfg.points_per_line
        for j in range(n):
            y = lo + (j + 0.5) / n * (hi - lo)
            pts.append(GridPoint(i, j, x, y))
    return pts


# ---------------------------------------------------------------------------
# per-point evaluation


@dataclass
class ScanRecord:
    i: int
    j: int
    x: float
    y: float
    in_region: bool = False
    status: str = ""
    elliptic: bool = False
    max_re: float = math.nan
    frequencies: tuple = (math.nan,) * 4
    Omega: tuple = (math.nan,) * 4
    cls: str = ""
    kam: bool = False
    detA: float = math.nan
    resonance_nu: tuple = ()
    resonance_order: int = 0
    resonance_divisor: float = math.nan
    overlays: dict = field(default_factory=dict)
    modes: object = None
    spectra: tuple = ()


def evaluate_point(cfg: ScanConfig, gp: GridPoint, level: str) -> ScanRecord:
    """Evaluate one grid point up to ``level``.

    Levels: ``regions``, ``ellipticity``, ``frequencies`` (adds the mode
    data used for resonance tracking), ``spectra`` (also keeps the normal
    form spectra) and ``classify``.  A numerical failure never propagates;
    it is recorded in the ``status`` field instead.
    """
    rec = ScanRecord(gp.i, gp.j, gp.x, gp.y)
    try:
        return _evaluate(cfg, gp, level, rec)
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        failed = ScanRecord(gp.i, gp.j, gp.x, gp.y, in_region=rec.in_region, overlays=rec.overlays)
        failed.status = "error:" + type(exc).__name__
        return failed


def _evaluate(cfg, gp, level, rec):
    try:
        b = semiaxes_from_xy(gp.x, gp.y, margin=cfg.margin)
    except DomainError:
        rec.status = "domain"
        return rec
    if cfg.generic_set:
        from . import oracles
        i, j, sign = _parse_generic_set(cfg.generic_set)
        rec.in_region = oracles.r_set(b, i, j, sign, cfg.g)
    else:
        rec.in_region = fam.region_contains(cfg.kind, b, cfg.g)
    if level == "regions":
        rec.overlays = fam.region_overlays(cfg.kind, b, cfg.g)
    if level == "regions" or not rec.in_region:
        rec.status = rec.status or ("ok" if rec.in_region else "outside")
        return rec
    try:
        e = fam.equilibrium(cfg.kind, b, cfg.branch, cfg.g)
        if not e.is_generic:
            rec.status = "irrotational"
            return rec
        lin = red.linearize(e, cfg.tol_ell)
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        rec.status = "error:" + type(exc).__name__
        return rec
    rec.elliptic = lin.elliptic
    rec.max_re = lin.max_real_part
    rec.frequencies = tuple(float(v) for v in lin.frequencies)
    rec.status = "ok"
    if level == "ellipticity" or not lin.elliptic:
        if not lin.elliptic:
            rec.cls = cl.StabilityTag.NotElliptic.value
        return rec
    res_abs = cfg.res_tol * float(np.linalg.norm(lin.frequencies))
    try:
        freq = nfm.symplectic_diagonalize(lin, e.kind.is_s_type, res_abs)
    except ResonanceError as exc:
        rec.cls = f"Resonant({exc.order})"
        rec.resonance_nu, rec.resonance_order, rec.resonance_divisor = exc.nu, exc.order, exc.divisor
        rec.status = "resonant"
        return rec
    except ArithmeticError as exc:
        rec.status = "error:" + type(exc).__name__
        return rec
    rec.Omega = tuple(float(v) for v in freq.Omega)
    rec.frequencies = tuple(float(v) for v in freq.omega)
    rec.modes = _mode_vectors(freq)
    if level == "frequencies":
        return rec
    try:
        nf = nfm.birkhoff_order4(e, res_abs, lin, cfg.spectral_tol)
    except (ArithmeticError, ValueError) as exc:
        rec.status = "error:" + type(exc).__name__
        return rec
    rec.spectra = (tuple(sorted(nf.spectrum3)), tuple(sorted(nf.spectrum4)))
    _nearest_resonance(rec, nf, cfg.max_order)
    if level == "spectra":
        return rec
    c = cl.classify_normal_form(nf, cfg.classify_tol, cfg.n_theta)
    rec.cls = c.label
    rec.kam = c.kam_nondegenerate
    if nf.constructed:
        rec.detA = cl.det_lu(nf.A)
    else:
        rec.status = "resonant"
    return rec


def _parse_generic_set(text):
    # "12-" means B^-_12 with one-based indices
    if len(text) != 3 or text[:2] not in ("12", "13", "23") or text[2] not in "+-":
        raise ConfigError(f"generic_set must look like '12-', got {text!r}")
    return int(text[0]) - 1, int(text[1]) - 1, (+1 if text[2] == "+" else -1)


def _mode_vectors(freq):
    """Complex mode vectors ``u + i v`` used to track modes between neighbours."""
    T = freq.T
    cols = [(0, 2), (1, 3), (4, 6), (5, 7)]
    vecs = np.array([T[:, a] + 1j * T[:, b] for a, b in cols])
    return vecs / np.linalg.norm(vecs, axis=1)[:, None]


def _nearest_resonance(rec, nf, max_order):
    Om = np.asarray(nf.Omega)
    best = None
    for nu in set(nf.spectrum3) | set(nf.spectrum4):
        order = sum(abs(v) for v in nu)
        if order == 0 or order > max_order:
            continue
        d = abs(Om @ nu) / np.linalg.norm(Om)
        if best is None or (d, nu) < best:
            best = (d, nu)
    if nf.resonances_hit:
        nu, order, d = min(nf.resonances_hit, key=lambda h: (h[2], h[0]))
        best = (d / np.linalg.norm(Om), nu)
    if best is not None:
        rec.resonance_divisor, rec.resonance_nu = float(best[0]), tuple(best[1])
        rec.resonance_order = sum(abs(v) for v in best[1])


def _worker(args):
    cfg, chunk, level = args
    return [evaluate_point(cfg, gp, level) for gp in chunk]


def run_scan(cfg: ScanConfig, level: str, points=None):
    """Evaluate every grid point; results are ordered like the grid."""
    pts = grid_points(cfg) if points is None else points
    if cfg.jobs <= 1 or len(pts) < 2:
        return [evaluate_point(cfg, gp, level) for gp in pts]
    nchunks = cfg.jobs * 4
    size = max(1, math.ceil(len(pts) / nchunks))
    chunks = [pts[k:k + size] for k in range(0, len(pts), size)]
    out = []
    with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
        for part in ex.map(_worker, [(cfg, ch, level) for ch in chunks]):
            out.extend(part)
    return out


# ---------------------------------------------------------------------------
# resonance tracking


def normalize_nu(nu):
    nu = tuple(int(v) for v in nu)
    for v in nu:
        if v != 0:
            return nu if v > 0 else tuple(-w for w in nu)
    return nu


def union_spectra(records, max_order=4):
    out = set()
    for r in records:
        for sp in r.spectra:
            for nu in sp:
                order = sum(abs(v) for v in nu)
                if 0 < order <= max_order:
                    out.add(normalize_nu(nu))
    return sorted(out)


def _match_modes(va, vb):
    """Permutation ``perm`` with mode ``k`` of A continuing as mode ``perm[k]`` of B."""
    ov = np.abs(va.conj() @ vb.T)
    perm = [-1] * 4
    taken = set()
    for flat in np.argsort(-ov, axis=None):
        a, b = divmod(int(flat), 4)
        if perm[a] < 0 and b not in taken:
            perm[a] = b
            taken.add(b)
    return tuple(perm)


@dataclass
class ResonanceScan:
    resonances: dict           # nu -> number of detected crossings
    curve_points: list         # (nu, x, y)
    spectra: list              # union spectrum used
    n_points: int
    n_elliptic: int


def neighbour_pairs(records):
    index = {(r.i, r.j): r for r in records}
    for r in records:
        for di, dj in ((1, 0), (0, 1)):
            s = index.get((r.i + di, r.j + dj))
            if s is not None:
                yield r, s


def detect_resonances(records, spectra, max_order=4):
    """Sign changes of ``Omega . nu`` between neighbouring elliptic points.

    Neighbours whose modes swap labels (a frequency crossing) are not
    compared term by term; the crossing itself is recorded as the order-two
    resonance between the swapped modes.
    """
    nus = np.array([nu for nu in spectra if sum(map(abs, nu)) <= max_order], dtype=float).reshape(-1, 4)
    found = {}
    curve = []

    def hit(nu, x, y):
        nu = normalize_nu(nu)
        found[nu] = found.get(nu, 0) + 1
        curve.append((nu, x, y))

    for a, b in neighbour_pairs(records):
        if a.modes is None or b.modes is None:
            continue
        perm = _match_modes(a.modes, b.modes)
        Oa = np.array(a.Omega)
        Ob = np.array(b.Omega)
        xm, ym = 0.5 * (a.x + b.x), 0.5 * (a.y + b.y)
        if perm != (0, 1, 2, 3):
            for k in range(4):
                l = perm[k]
                if l > k and perm[l] == k:
                    nu = [0] * 4
                    nu[k], nu[l] = int(np.sign(Oa[k])), -int(np.sign(Oa[l]))
                    if sum(map(abs, nu)) <= max_order:
                        hit(nu, xm, ym)
            continue
        if np.any(np.sign(Oa) != np.sign(Ob)) or not len(nus):
            continue
        da, db = nus @ Oa, nus @ Ob
        for k in np.where((da * db <= 0) & ((da != 0) | (db != 0)))[0]:
            w = da[k] / (da[k] - db[k]) if da[k] != db[k] else 0.5
            hit(tuple(int(v) for v in nus[k]), a.x + w * (b.x - a.x), a.y + w * (b.y - a.y))
    return found, curve


def resonance_scan(cfg: ScanConfig) -> ResonanceScan:
    pts = grid_points(cfg)
    recs = run_scan(cfg, "frequencies", pts)
    tracked = [gp for gp, r in zip(pts, recs) if r.modes is not None]
    # spectra saturate quickly, so a thinned sample of the elliptic points suffices
    stride = cfg.spectra_stride or max(1, len(tracked) // cfg.spectra_samples)
    spec_recs = run_scan(cfg, "spectra", tracked[::stride])
    spectra = union_spectra(spec_recs, cfg.max_order)
    found, curve = detect_resonances(recs, spectra, cfg.max_order)
    if cfg.bisect > 0:
        curve = [_bisect_curve_point(cfg, nu, p) for nu, *p in curve]
    n_ell = sum(r.elliptic for r in recs)
    return ResonanceScan(dict(sorted(found.items())), sorted(curve), spectra, len(recs), n_ell)


def _omega_at(cfg, x, y):
    rec = evaluate_point(cfg, GridPoint(0, 0, x, y), "frequencies")
    return None if rec.modes is None else (np.array(rec.Omega), rec.modes)


def _bisect_curve_point(cfg, nu, p):
    """Move an interpolated crossing onto the zero of ``Omega . nu`` along the vertical line."""
    x, y = p
    half = 0.5 * (cfg.ymax - cfg.ymin if cfg.points else x) / cfg.points_per_line
    lo, hi = y - half, y + half
    flo, fhi = _omega_at(cfg, x, lo), _omega_at(cfg, x, hi)
    if flo is None or fhi is None:
        return (nu, x, y)
    nv = np.array(nu, float)
    glo, ghi = flo[0] @ nv, fhi[0] @ nv
    if glo * ghi > 0:
        return (nu, x, y)
    for _ in range(cfg.bisect):
        mid = 0.5 * (lo + hi)
        fm = _omega_at(cfg, x, mid)
        if fm is None:
            break
        gm = fm[0] @ nv
        if glo * gm <= 0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return (nu, x, 0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# output


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FMT.format(float(v))
    if isinstance(v, tuple):
        return " ".join(str(int(t)) for t in v)
    return str(v)


COLUMNS = {
    "regions": ["i", "j", "x", "y", "in_region", "status"],
    "ellipticity": ["i", "j", "x", "y", "in_region", "status", "elliptic", "max_re",
                    "omega1", "omega2", "omega3", "omega4"],
    "classify": ["i", "j", "x", "y", "in_region", "status", "elliptic", "max_re",
                 "omega1", "omega2", "omega3", "omega4", "Omega1", "Omega2", "Omega3", "Omega4",
                 "class", "kam", "detA", "nearest_nu", "nearest_order", "nearest_divisor"],
}


def record_row(rec: ScanRecord, command: str, overlay_keys=()):
    base = {
        "i": rec.i, "j": rec.j, "x": rec.x, "y": rec.y, "in_region": rec.in_region,
        "status": rec.status, "elliptic": rec.elliptic, "max_re": rec.max_re,
        "class": rec.cls, "kam": rec.kam, "detA": rec.detA,
        "nearest_nu": rec.resonance_nu, "nearest_order": rec.resonance_order,
        "nearest_divisor": rec.resonance_divisor,
    }
    for k in range(4):
        base[f"omega{k + 1}"] = rec.frequencies[k]
        base[f"Omega{k + 1}"] = rec.Omega[k]
    row = [fmt(base[c]) for c in COLUMNS[command]]
    row += [fmt(rec.overlays.get(k, math.nan)) for k in overlay_keys]
    return row


def write_csv(stream, header, rows):
    stream.write(",".join(header) + "\n")
    for row in rows:
        stream.write(",".join(row) + "\n")


def records_csv(records, command) -> str:
    keys = sorted({k for r in records for k in r.overlays}) if command == "regions" else []
    buf = io.StringIO(newline="")
    write_csv(buf, COLUMNS[command] + keys, (record_row(r, command, keys) for r in records))
    return buf.getvalue()


def resonance_csv(result: ResonanceScan) -> str:
    buf = io.StringIO(newline="")
    rows = [[fmt(nu), str(sum(map(abs, nu))), str(n)] for nu, n in result.resonances.items()]
    write_csv(buf, ["nu", "order", "crossings"], rows)
    return buf.getvalue()


def curves_csv(result: ResonanceScan) -> str:
    buf = io.StringIO(newline="")
    write_csv(buf, ["nu", "x", "y"], ([fmt(nu), fmt(x), fmt(y)] for nu, x, y in result.curve_points))
    return buf.getvalue()


def summary(records) -> dict:
    inside = [r for r in records if r.in_region]
    ok = [r for r in inside if r.status in ("ok", "resonant")]
    failed = [r for r in inside if r.status.startswith("error")]
    ell = [r for r in ok if r.elliptic]
    return {
        "points": len(records),
        "in_region": len(inside),
        "evaluated": len(ok),
        "failures": len(failed),
        "failure_rate": len(failed) / len(inside) if inside else 0.0,
        "elliptic": len(ell),
        "elliptic_fraction": len(ell) / len(ok) if ok else 0.0,
    }


_SVG_COLORS = {
    "outside": "#ffffff", "inside": "#c8c8c8", "elliptic": "#505050", "DirectionallyQuasiConvex": "#4a78b0",
    "QuasiConvex": "#e0a030", "Convex": "#c03030", "NotElliptic": "#d8d8d8", "resonant": "#30a050",
}


def svg_raster(records, cfg: ScanConfig, command: str, size=600) -> str:
    """Shaded raster of the scan in the shape triangle (x right, y up)."""
    n = cfg.points_per_line
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 1 1">',
           '<g transform="translate(0,1) scale(1,-1)">',
           '<path d="M0 0 L1 0 L1 1 Z" fill="none" stroke="black" stroke-width="0.002"/>']
    for r in records:
        if command == "regions":
            key = "inside" if r.in_region else "outside"
        elif not r.in_region:
            key = "outside"
        elif command == "ellipticity":
            key = "elliptic" if r.elliptic else "NotElliptic"
        else:
            key = "resonant" if r.cls.startswith("Resonant") else r.cls
        color = _SVG_COLORS.get(key)
        if color is None or key == "outside":
            continue
        h = (min(cfg.ymax, r.x) - max(cfg.ymin, 0.0)) / n if not cfg.points else 0.004
        w = cfg.dx if not cfg.points else 0.004
        out.append(f'<rect x="{r.x - w / 2:.6f}" y="{r.y - h / 2:.6f}" width="{w:.6f}" '
                   f'height="{h:.6f}" fill="{color}"/>')
    out.append("</g></svg>")
    return "\n".join(out) + "\n"

