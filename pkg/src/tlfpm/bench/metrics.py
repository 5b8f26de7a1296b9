"""Error measures and field transfer between point clouds."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

MLS_WEIGHTS = ("quartic", "regularized")


class NormalizationError(ValueError):
    """The reference field has zero range, so NRMSE is undefined."""


class InsufficientNeighbours(ValueError):
    """An MLS target point has too few source points in its support."""


def nrmse(u_h, u_ref):
    """sqrt(mean((u_h - u_ref)^2)) / (max u_ref - min u_ref)."""
    u_h = np.asarray(u_h, float).ravel()
    u_ref = np.asarray(u_ref, float).ravel()
    if u_h.shape != u_ref.shape:
        raise ValueError(f"field sizes differ: {u_h.size} vs {u_ref.size}")
    span = np.ptp(u_ref) if u_ref.size else 0.0
    if not span > 0:
        raise NormalizationError("reference field is constant; NRMSE normalisation is undefined")
    return float(np.sqrt(np.mean((u_h - u_ref) ** 2)) / span)


def nrmse_vector(u_h, u_ref):
    """(Euclidean norm of component NRMSEs, per-component NRMSEs) for (n, dim) fields.

    Components whose reference range is zero are skipped; if every one is, the
    normalisation error propagates.
    """
    u_h = np.asarray(u_h, float)
    u_ref = np.asarray(u_ref, float)
    if u_h.shape != u_ref.shape:
        raise ValueError(f"field shapes differ: {u_h.shape} vs {u_ref.shape}")
    comps = []
    for c in range(u_ref.shape[1]):
        try:
            comps.append(nrmse(u_h[:, c], u_ref[:, c]))
        except NormalizationError:
            comps.append(np.nan)
    comps = np.array(comps)
    if np.all(np.isnan(comps)):
        raise NormalizationError("every reference component is constant")
    return float(np.sqrt(np.nansum(comps**2))), comps


def _weight(s, kind, eps=1e-5):
    s = np.clip(s, 0.0, 1.0)
    if kind == "quartic":
        return 1.0 - 6.0 * s**2 + 8.0 * s**3 - 3.0 * s**4
    if kind == "regularized":
        w = ((s * s + eps) ** -2 - (1.0 + eps) ** -2) / (eps**-2 - (1.0 + eps) ** -2)
        return np.maximum(w, 0.0)
    raise ValueError(f"unknown MLS weight {kind!r}; use one of {MLS_WEIGHTS}")


def mls_map(source_points, values, target_points, radius, weight="quartic"):
    """Linear-basis moving least squares transfer of ``values`` onto ``target_points``.

    Targets that coincide with a source point take its value directly, which
    keeps same-cloud transfers exact. Any affine field is reproduced exactly.
    """
    src = np.asarray(source_points, float)
    tgt = np.asarray(target_points, float)
    vals = np.asarray(values, float)
    scalar = vals.ndim == 1
    vals = vals.reshape(len(src), -1)
    dim = src.shape[1]
    tree = cKDTree(src)
    nb = tree.query_ball_point(tgt, radius)
    out = np.empty((len(tgt), vals.shape[1]))
    snap_tol = 1e-12 * radius
    rows, cols = [], []
    for t, idx in enumerate(nb):
        if len(idx) < dim + 1:
            raise InsufficientNeighbours(
                f"target point {t} at {tgt[t].tolist()} has {len(idx)} source points within "
                f"radius {radius}; need at least {dim + 1}"
            )
        rows.append(np.full(len(idx), t))
        cols.append(np.asarray(idx))
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    d = src[cols] - tgt[rows]
    dist = np.linalg.norm(d, axis=1)
    w = _weight(dist / radius, weight)
    p = np.column_stack([np.ones(len(d)), d / radius])
    A = np.zeros((len(tgt), dim + 1, dim + 1))
    B = np.zeros((len(tgt), dim + 1, vals.shape[1]))
    np.add.at(A, rows, w[:, None, None] * p[:, :, None] * p[:, None, :])
    np.add.at(B, rows, w[:, None, None] * p[:, :, None] * vals[cols][:, None, :])
    cond = np.linalg.cond(A)
    bad = np.flatnonzero(~np.isfinite(cond) | (cond > 1e12))
    snapped = np.full(len(tgt), -1)
    hit = dist <= snap_tol
    snapped[rows[hit]] = cols[hit]
    bad = bad[snapped[bad] < 0]
    if bad.size:
        t = int(bad[0])
        raise InsufficientNeighbours(
            f"target point {t} at {tgt[t].tolist()}: MLS moment matrix is singular "
            f"(source points within radius {radius} do not span the space)"
        )
    ok = snapped < 0
    out[ok] = np.linalg.solve(A[ok], B[ok])[:, 0, :]
    out[~ok] = vals[snapped[~ok]]
    return out[:, 0] if scalar else out
