"""Brute-force reference implementations used as independent test oracles.

Everything here is written as plain double loops on purpose: slow, obvious,
and structurally unrelated to the library code it checks.
"""
import math

import numpy as np


def dilate_oracle(m, r):
    h, w = m.shape
    out = np.zeros_like(m)
    for y in range(h):
        for x in range(w):
            best = 0.0
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w:
                        best = max(best, m[yy, xx])
            out[y, x] = best
    return out


def boundary_oracle(seg, thickness):
    h, w = seg.shape
    r = math.ceil(thickness / 2)
    out = np.zeros_like(seg)
    for y in range(h):
        for x in range(w):
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and seg[yy, xx] != seg[y, x]:
                        out[y, x] = 1
    return out


def fill_oracle(edges):
    h, w = edges.shape
    reached = np.zeros((h, w), dtype=bool)
    stack = [(y, x) for y in range(h) for x in range(w)
             if (y in (0, h - 1) or x in (0, w - 1)) and edges[y, x] == 0]
    for p in stack:
        reached[p] = True
    while stack:
        y, x = stack.pop()
        for dy, dx in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            yy, xx = y + dy, x + dx
            if 0 <= yy < h and 0 <= xx < w and not reached[yy, xx] and edges[yy, xx] == 0:
                reached[yy, xx] = True
                stack.append((yy, xx))
    return (~reached).astype(np.uint8)


def downsample_oracle(m, f):
    h, w = m.shape
    out = np.zeros((h // f, w // f))
    for y in range(h // f):
        for x in range(w // f):
            out[y, x] = m[y * f:(y + 1) * f, x * f:(x + 1) * f].mean()
    return out


def upsample_oracle(m, th, tw):
    h, w = m.shape
    out = np.zeros((th, tw))
    for y in range(th):
        for x in range(tw):
            sy = 0.0 if th == 1 or h == 1 else y * (h - 1) / (th - 1)
            sx = 0.0 if tw == 1 or w == 1 else x * (w - 1) / (tw - 1)
            y0, x0 = int(sy), int(sx)
            y1, x1 = min(y0 + 1, h - 1), min(x0 + 1, w - 1)
            fy, fx = sy - y0, sx - x0
            out[y, x] = (m[y0, x0] * (1 - fy) * (1 - fx) + m[y0, x1] * (1 - fy) * fx
                         + m[y1, x0] * fy * (1 - fx) + m[y1, x1] * fy * fx)
    return out


def rotate_oracle(m, k):
    # one counterclockwise quarter turn: out[i, j] = in[j, W - 1 - i]
    out = m
    for _ in range(k):
        h, w = out.shape
        nxt = np.zeros((w, h), dtype=out.dtype)
        for i in range(w):
            for j in range(h):
                nxt[i, j] = out[j, w - 1 - i]
        out = nxt
    return out


def match_probability_oracle(feat, p_fg, p_bg, tau):
    """Direct per-pixel evaluation of the two-way distance softmax, float128-ish."""
    c, h, w = feat.shape
    out = np.zeros((h, w))
    for y in range(h):
        for x in range(w):
            d_fg = float(((feat[:, y, x] - p_fg) ** 2).sum())
            d_bg = float(((feat[:, y, x] - p_bg) ** 2).sum())
            a, b = -tau * d_fg, -tau * d_bg
            m = max(a, b)
            out[y, x] = math.exp(a - m) / (math.exp(a - m) + math.exp(b - m))
    return out


def prototype_oracle(feats, masks, mask_norm=False):
    """Triple-loop masked pooling: feats [N,C,h,w], masks [N,h,w]."""
    n, c, h, w = feats.shape
    p_fg = np.zeros(c)
    p_bg = np.zeros(c)
    m_fg = 0.0
    m_bg = 0.0
    for i in range(n):
        for y in range(h):
            for x in range(w):
                p_fg += feats[i, :, y, x] * masks[i, y, x]
                p_bg += feats[i, :, y, x] * (1 - masks[i, y, x])
                m_fg += masks[i, y, x]
                m_bg += 1 - masks[i, y, x]
    if mask_norm:
        return p_fg / max(m_fg, 1e-12), p_bg / max(m_bg, 1e-12)
    return p_fg / (n * h * w), p_bg / (n * h * w)


def confusion_oracle(pred, gt, t, valid):
    """Exact per-pixel counting at one threshold; positives in the pad are fp."""
    top, left, vh, vw = valid
    h, w = pred.shape
    tp = fp = fn = 0
    for y in range(h):
        for x in range(w):
            inside = top <= y < top + vh and left <= x < left + vw
            g = gt[y, x] if inside else 0
            p = 1 if pred[y, x] > t else 0
            if p and g:
                tp += 1
            elif p and not g:
                fp += 1
            elif g and not p:
                fn += 1
    return tp, fp, fn


def average_precision_exhaustive(preds, gts, valids):
    """AP sweeping every distinct score as a threshold (plus one below all)."""
    scores = np.unique(np.concatenate([p.ravel() for p in preds]))
    thresholds = np.concatenate([[-1.0], scores])
    points = []
    for t in thresholds:
        tp = fp = fn = 0
        for p, g, v in zip(preds, gts, valids):
            a, b, c = confusion_oracle(p, g, t, v)
            tp, fp, fn = tp + a, fp + b, fn + c
        prec = tp / (tp + fp) if tp + fp else 1.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        points.append((rec, prec))
    points.sort(key=lambda rp: rp[0])
    ap = 0.0
    prev_r = 0.0
    for r, p in points:
        ap += (r - prev_r) * p
        prev_r = r
    return ap
