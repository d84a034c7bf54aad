"""The five analysis procedures used on spectra and photon streams: Voigt
linewidth, exponentially-modified-Gaussian lifetime, peak-area g2(0),
fine-structure-splitting sinusoid, and the four-Lorentzian decomposition of
a two-component transmitted profile.

Every fitter is deterministic given (data, starts): trust-region least
squares from a fixed multi-start grid, 95% confidence half-widths from the
Jacobian at the optimum (linearized, Student-t scaled). Each has a matching
synthetic-data generator so the suite can Monte-Carlo its own recovery.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, least_squares
from scipy.special import erfc, erfcx, wofz
from scipy.stats import t as student_t

SQRT2 = np.sqrt(2.0)
FWHM_SIGMA = np.sqrt(8.0 * np.log(2.0))


@dataclass(frozen=True)
class Histogram1D:
    """Uniformly binned nonnegative counts; axis units are the caller's
    business (seconds for decays and coincidences, Hz for scans)."""
    bin_start: float
    bin_width: float
    counts: np.ndarray

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError("bin width must be positive")
        counts = np.asarray(self.counts, dtype=float)
        if counts.ndim != 1 or counts.size < 1:
            raise ValueError("counts must be a non-empty 1-d array")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts)

    @property
    def centers(self) -> np.ndarray:
        return self.bin_start + (np.arange(self.counts.size) + 0.5) * self.bin_width

    @property
    def span(self) -> float:
        return self.counts.size * self.bin_width


@dataclass(frozen=True)
class FitResult:
    """params and ci95 share keys; ci95 entries are 95% half-widths.
    residual_norm is ||residual|| / ||data||. Component arrays (per-peak
    areas, sub-component parameters) live in series; advisory markers such
    as components-degenerate or singular-jacobian in flags."""
    params: dict
    ci95: dict
    residual_norm: float
    converged: bool
    series: dict = field(default_factory=dict)
    flags: frozenset = frozenset()


def _ci95_halfwidths(jac: np.ndarray, cost: float, n_obs: int):
    """Linearized 95% intervals from the Jacobian at the optimum.

    cost is the scipy least_squares objective 0.5*sum(r^2). Returns the
    half-width vector, the parameter covariance, and a singularity flag
    (rank-deficient fits get infinite widths on the dead directions).
    """
    n_par = jac.shape[1]
    dof = n_obs - n_par
    if dof <= 0:
        return np.full(n_par, np.inf), None, True
    s2 = 2.0 * cost / dof
    # equilibrate columns first: parameter scales differ by many decades
    # (times in seconds vs areas in counts) and would swamp the SVD cutoff
    col = np.linalg.norm(jac, axis=0)
    col[col == 0.0] = 1.0
    u, s, vt = np.linalg.svd(jac / col, full_matrices=False)
    cutoff = s.max() * max(jac.shape) * np.finfo(float).eps if s.size else 0.0
    dead = s <= cutoff
    inv_s2 = np.where(dead, 0.0, 1.0 / np.where(dead, 1.0, s) ** 2)
    cov = ((vt.T * (inv_s2 * s2)) @ vt) / np.outer(col, col)
    var = np.diag(cov).copy()
    if np.any(dead):
        # a parameter with any null-space component has unbounded variance
        var[np.any(np.abs(vt[dead]) > 1e-12, axis=0)] = np.inf
    tval = student_t.ppf(0.975, dof)
    half = np.where(np.isfinite(var), tval * np.sqrt(np.maximum(var, 0.0)), np.inf)
    return half, cov, bool(np.any(dead))


def _best_of_starts(residual_fn, starts, bounds, x_scale):
    """Run trust-region least squares from each start, keep the lowest cost.

    diff_step must stay relative: scipy's default finite-difference step is
    absolute for sub-unity parameters, which breaks fits in SI seconds.

    Returns (scipy result, initial cost at the winning start)."""
    best = None
    best_init = None
    for x0 in starts:
        x0 = np.clip(np.asarray(x0, dtype=float), bounds[0], bounds[1])
        init_cost = 0.5 * float(np.sum(residual_fn(x0) ** 2))
        try:
            res = least_squares(residual_fn, x0, bounds=bounds, method="trf",
                                x_scale=x_scale, max_nfev=4000, diff_step=1e-6,
                                xtol=1e-12, ftol=1e-12, gtol=1e-12)
        except ValueError:
            continue
        if best is None or res.cost < best.cost:
            best, best_init = res, init_cost
    if best is None:
        raise RuntimeError("all starts failed")
    return best, best_init


# ---------------------------------------------------------------- Voigt

def voigt_value(x, sigma: float, gamma: float):
    """Unit-area Voigt: Re[w((x + i gamma)/(sigma sqrt2))] / (sigma sqrt(2 pi))."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = (np.asarray(x, dtype=float) + 1j * gamma) / (sigma * SQRT2)
    return wofz(z).real / (sigma * np.sqrt(2.0 * np.pi))


def voigt_fwhm(f_gauss: float, f_lorentz: float) -> float:
    """Combination rule 0.5346 f_L + sqrt(0.2166 f_L^2 + f_G^2).

    Accurate to 2.4e-4 relative at worst (near f_L/f_G ~ 0.3); see
    voigt_fwhm_numeric for the brute-force value.
    """
    return 0.5346 * f_lorentz + np.sqrt(0.2166 * f_lorentz**2 + f_gauss**2)


def voigt_fwhm_numeric(f_gauss: float, f_lorentz: float) -> float:
    """FWHM of the evaluated profile, by bisecting the half-maximum crossing."""
    sigma = max(f_gauss, 1e-12 * max(f_lorentz, 1.0)) / FWHM_SIGMA
    gamma = 0.5 * f_lorentz
    peak = voigt_value(0.0, sigma, gamma)
    hi = 2.0 * (f_gauss + f_lorentz) + 10.0 * sigma
    half = brentq(lambda x: voigt_value(x, sigma, gamma) - 0.5 * peak,
                  1e-12 * hi, hi, xtol=1e-15 * hi, rtol=8.9e-16)
    return 2.0 * half


def fit_voigt(scan: Histogram1D) -> FitResult:
    """Fit offset + area * Voigt(x - center; sigma, gamma) to a line scan.

    Works for emission peaks and for transmission dips (negative area). The
    reported f_V comes from the combination rule on the fitted widths, with
    its confidence interval propagated through the (sigma, gamma) covariance.
    """
    if scan.counts.size < 20:
        raise ValueError("need at least 20 bins")
    x = scan.centers
    y = scan.counts
    lo, hi = float(y.min()), float(y.max())
    if hi - lo <= 0:
        raise ValueError("flat data cannot constrain a line shape")
    med = float(np.median(y))
    dip = (hi - med) < (med - lo)
    offset0 = hi if dip else lo
    peak_idx = int(np.argmin(y)) if dip else int(np.argmax(y))
    center0 = float(x[peak_idx])
    height0 = (lo - offset0) if dip else (hi - offset0)
    # crude width from the half-crossing span around the extremum
    above = np.abs(y - offset0) > 0.5 * abs(height0)
    w_est = max(float(np.sum(above)) * scan.bin_width, scan.bin_width)
    if scan.span < 3.0 * w_est:
        raise ValueError("scan must span at least 3x the line width")

    def residual(p):
        center, sigma, gamma, area, offset = p
        return offset + area * voigt_value(x - center, sigma, gamma) - y

    starts = []
    for frac_l in (0.05, 0.5, 0.95):
        f_l0 = frac_l * w_est
        f_g0 = np.sqrt(max((w_est - 0.5346 * f_l0) ** 2 - 0.2166 * f_l0**2,
                           (0.05 * w_est) ** 2))
        sigma0 = f_g0 / FWHM_SIGMA
        gamma0 = 0.5 * f_l0
        area0 = height0 / voigt_value(0.0, sigma0, gamma0)
        starts.append([center0, sigma0, gamma0, area0, offset0])
    span = scan.span
    bounds = ([x[0] - span, 1e-3 * scan.bin_width, 0.0, -np.inf, -np.inf],
              [x[-1] + span, 10.0 * span, 10.0 * span, np.inf, np.inf])
    x_scale = [w_est, w_est, w_est, abs(height0) * w_est + 1e-300, abs(height0) + 1e-300]
    best, init_cost = _best_of_starts(residual, starts, bounds, x_scale)
    center, sigma, gamma, area, offset = best.x
    half, cov, singular = _ci95_halfwidths(best.jac, best.cost, y.size)

    f_g = FWHM_SIGMA * sigma
    f_l = 2.0 * gamma
    f_v = voigt_fwhm(f_g, f_l)
    root = np.sqrt(0.2166 * f_l**2 + f_g**2)
    # d f_V / d(sigma, gamma) for the delta-method interval
    grad = np.zeros(5)
    grad[1] = (f_g / root) * FWHM_SIGMA
    grad[2] = (0.5346 + 0.2166 * f_l / root) * 2.0
    fv_half = np.inf
    if cov is not None and np.all(np.isfinite(cov[1:3, 1:3])):
        dof = y.size - 5
        fv_half = student_t.ppf(0.975, dof) * np.sqrt(max(grad @ cov @ grad, 0.0))

    flags = frozenset({"singular-jacobian"}) if singular else frozenset()
    return FitResult(
        params={"center": center, "f_gauss": f_g, "f_lorentz": f_l,
                "f_voigt": f_v, "amplitude": area, "offset": offset},
        ci95={"center": half[0], "f_gauss": FWHM_SIGMA * half[1],
              "f_lorentz": 2.0 * half[2], "f_voigt": fv_half,
              "amplitude": half[3], "offset": half[4]},
        residual_norm=float(np.sqrt(2.0 * best.cost) / np.linalg.norm(y)),
        converged=bool(best.success and best.cost <= init_cost * (1.0 + 1e-9)),
        flags=flags)


# ------------------------------------------------------------------ EMG

def emg_value(t, t0: float, sigma: float, lifetime: float):
    """Gaussian(sigma) convolved with decay exp(-t/lifetime)/lifetime.

    Unit area. The published formula writes the decay constant as tau inside
    a rate-style exponent; here lifetime is a time and the rate is its
    inverse. Evaluated in the two-branch form that stays finite on both
    tails (erfcx alone overflows far past t0).
    """
    if sigma < 0 or lifetime <= 0:
        raise ValueError("need sigma >= 0 and a positive lifetime")
    t = np.asarray(t, dtype=float)
    lam = 1.0 / lifetime
    if sigma == 0.0:
        dt = t - t0
        return np.where(dt >= 0, lam * np.exp(-lam * np.where(dt >= 0, dt, 0.0)), 0.0)
    u = (t0 - t + lam * sigma**2) / (sigma * SQRT2)
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 0.5 * lam * erfcx(u[pos]) * np.exp(-((t[pos] - t0) ** 2) / (2 * sigma**2))
    w = lam * (t0 - t[~pos]) + 0.5 * (lam * sigma) ** 2
    out[~pos] = 0.5 * lam * np.exp(w) * erfc(u[~pos])
    return out


def fit_emg(decay: Histogram1D) -> FitResult:
    """Fit amplitude * EMG(t; t0, sigma, lifetime) to a decay histogram."""
    t = decay.centers
    y = decay.counts
    if y.max() <= 0:
        raise ValueError("empty decay histogram")
    peak_idx = int(np.argmax(y))
    t_peak = float(t[peak_idx])

    # first three moments of an EMG invert in closed form and make by far
    # the best seed; a tail-slope estimate backs it up
    wsum = float(np.sum(y))
    m1 = float(np.sum(t * y)) / wsum
    m2c = float(np.sum((t - m1) ** 2 * y)) / wsum
    m3c = float(np.sum((t - m1) ** 3 * y)) / wsum
    tau_m = float(np.cbrt(max(m3c, 0.0) / 2.0))
    tau_m = float(np.clip(tau_m, decay.bin_width, decay.span))
    sigma_m = float(np.sqrt(max(m2c - tau_m**2, (0.25 * decay.bin_width) ** 2)))
    t0_m = m1 - tau_m

    tail = (t > t_peak) & (y > 0.02 * y.max())
    if np.sum(tail) >= 3:
        slope = np.polyfit(t[tail], np.log(y[tail]), 1)[0]
        tau_t = -1.0 / slope if slope < 0 else tau_m
    else:
        tau_t = tau_m
    tau_t = float(np.clip(tau_t, decay.bin_width, decay.span))
    if decay.span < 5.0 * min(tau_m, tau_t):
        raise ValueError("histogram must cover at least 5 lifetimes")
    sigma0, tau0 = sigma_m, tau_m
    area0 = wsum * decay.bin_width

    def residual(p):
        t0, sigma, tau, amp = p
        return amp * emg_value(t, t0, sigma, tau) - y

    starts = [[t0_m, sigma_m, tau_m, area0],
              [t_peak - sigma_m, sigma_m, tau_t, area0],
              [t_peak - 3.0 * sigma_m, 3.0 * sigma_m, tau_t, area0]]
    bounds = ([t[0] - decay.span, 1e-3 * decay.bin_width, 0.1 * decay.bin_width, 0.0],
              [t[-1], decay.span, 2.0 * decay.span, np.inf])
    x_scale = [tau0, sigma0, tau0, area0]
    best, init_cost = _best_of_starts(residual, starts, bounds, x_scale)
    t0, sigma, tau, amp = best.x
    half, _, singular = _ci95_halfwidths(best.jac, best.cost, y.size)
    flags = frozenset({"singular-jacobian"}) if singular else frozenset()
    return FitResult(
        params={"lifetime": tau, "sigma": sigma, "t0": t0, "amplitude": amp},
        ci95={"lifetime": half[2], "sigma": half[1], "t0": half[0],
              "amplitude": half[3]},
        residual_norm=float(np.sqrt(2.0 * best.cost) / np.linalg.norm(y)),
        converged=bool(best.success and best.cost <= init_cost * (1.0 + 1e-9)),
        flags=flags)


# ------------------------------------------------------------------- g2

def _halfside(x, a):
    """exp(-x^2/2) erfcx((a - x)/sqrt2), switched to its exponential-tail
    identity when the erfcx argument goes negative (where erfcx overflows)."""
    out = np.empty_like(x)
    neg = x > a
    out[~neg] = np.exp(-0.5 * x[~neg] ** 2) * erfcx((a - x[~neg]) / SQRT2)
    xn = x[neg]
    out[neg] = (2.0 * np.exp(0.5 * a * a - a * xn)
                - np.exp(-0.5 * xn**2) * erfcx((xn - a) / SQRT2))
    return out


def coincidence_peak_value(t, center: float, sigma: float, rate: float):
    """Gaussian(sigma) convolved with (rate/2) exp(-rate |t|): one histogram
    peak of a pulsed coincidence measurement. Unit area."""
    x = (np.asarray(t, dtype=float) - center) / sigma
    a = sigma * rate
    return 0.25 * rate * (_halfside(x, a) + _halfside(-x, a))


def coincidence_peak_fwhm(sigma: float, rate: float) -> float:
    peak = coincidence_peak_value(0.0, 0.0, sigma, rate)
    hi = 4.0 / rate + 6.0 * sigma
    half = brentq(lambda x: coincidence_peak_value(x, 0.0, sigma, rate) - 0.5 * peak,
                  0.0, hi, xtol=1e-15 * hi)
    return 2.0 * half


def compute_g2(coincidences: Histogram1D, rep_period: float,
               n_side_peaks: int = 12) -> FitResult:
    """Peak-area antibunching estimate from a pulsed coincidence histogram.

    Each side peak (n_side_peaks per side) is fitted with the Gaussian x
    double-sided-exponential model; its area is the raw count sum within one
    fitted FWHM of the fitted center. g2(0) = center area / mean(side areas):
    the mean denominator makes a Poissonian source read exactly 1, where the
    literal sum over side peaks (reported as g2_literal_sum) would not.
    ci95 on g2 folds in the center-peak counting error; g2_std and
    g2_stderr carry the across-peak spread and its standard error.
    """
    if n_side_peaks < 2:
        raise ValueError("need at least two side peaks per side")
    if rep_period <= 10.0 * coincidences.bin_width:
        raise ValueError("repetition period must be well above the bin width")
    t = coincidences.centers
    y = coincidences.counts
    if t[0] > -n_side_peaks * rep_period or t[-1] < n_side_peaks * rep_period:
        raise ValueError(f"histogram must span {n_side_peaks} periods each side")

    orders = [k for k in range(-n_side_peaks, n_side_peaks + 1) if k != 0]
    areas = []
    centers_err = []
    fit_rss = 0.0
    fit_n = 0
    ok = True
    widths = []
    for k in orders:
        nominal = k * rep_period
        win = np.abs(t - nominal) < 0.45 * rep_period
        tw, yw = t[win], y[win]
        if yw.max() <= 0:
            raise ValueError(f"no counts near side peak {k}")
        c0 = float(tw[np.argmax(yw)])
        total0 = float(np.sum(yw)) * coincidences.bin_width
        w0 = max(total0 / max(yw.max(), 1e-300), 4.0 * coincidences.bin_width)

        def residual(p, tw=tw, yw=yw):
            amp, center, sigma, rate = p
            return amp * coincidence_peak_value(tw, center, sigma, rate) - yw

        starts = [[total0, c0, 0.25 * w0, 2.0 / w0],
                  [total0, c0, 0.1 * w0, 4.0 / w0]]
        bounds = ([0.0, nominal - 0.45 * rep_period, coincidences.bin_width / 20.0,
                   0.1 / rep_period],
                  [np.inf, nominal + 0.45 * rep_period, rep_period,
                   20.0 / coincidences.bin_width])
        try:
            best, init_cost = _best_of_starts(residual, starts, bounds,
                                              [total0, w0, w0, 1.0 / w0])
        except RuntimeError:
            ok = False
            continue
        amp, center, sigma, rate = best.x
        ok = ok and bool(best.success and best.cost <= init_cost * (1.0 + 1e-9))
        fwhm = coincidence_peak_fwhm(sigma, rate)
        widths.append(fwhm)
        sel = np.abs(t - center) <= fwhm
        areas.append(float(np.sum(y[sel])))
        centers_err.append(center - nominal)
        fit_rss += 2.0 * best.cost
        fit_n += yw.size

    if len(areas) < 2 * n_side_peaks:
        ok = False
    areas = np.asarray(areas)
    mean_side = float(np.mean(areas))
    if mean_side <= 0:
        raise ValueError("side peaks carry no counts")

    # center peak may be tiny or absent: sum around the comb's own origin
    origin = float(np.mean(centers_err))
    width0 = float(np.median(widths))
    sel0 = np.abs(t - origin) <= width0
    a0 = float(np.sum(y[sel0]))

    g2 = a0 / mean_side
    spread = float(np.std(areas, ddof=1)) / mean_side
    g2_std = g2 * spread if g2 > 0 else spread
    g2_sem = g2_std / np.sqrt(areas.size)
    counting = np.sqrt(max(a0, 1.0)) / mean_side
    ci = 1.96 * float(np.hypot(counting, g2 * spread / np.sqrt(areas.size)))
    return FitResult(
        params={"g2_0": g2, "g2_std": g2_std, "g2_stderr": g2_sem,
                "g2_literal_sum": a0 / float(np.sum(areas)),
                "mean_side_area": mean_side},
        ci95={"g2_0": ci},
        residual_norm=float(np.sqrt(fit_rss) / max(np.linalg.norm(y), 1e-300)),
        converged=ok,
        series={"per_peak_areas": areas,
                "peak_orders": np.asarray(orders, dtype=float)})


# ------------------------------------------------------------------ FSS

def fit_fss(angles_rad, energies) -> FitResult:
    """Fit offset + (fss/2) sin(2 theta + phase) to peak energy vs
    polarization angle; fss is the peak-to-peak splitting.

    The linear form offset + a sin2t + b cos2t seeds the nonlinear fit, so
    the only iteration left is the reparameterization. Angle offsets move
    only the phase (tested property); absolute phase carries no meaning.
    """
    theta = np.asarray(angles_rad, dtype=float)
    e = np.asarray(energies, dtype=float)
    if theta.size != e.size:
        raise ValueError("angle and energy arrays must match")
    if theta.size < 8:
        raise ValueError("need at least 8 samples")
    # tolerance absorbs %.9g round-tripping of an endpoint at pi
    if theta.max() - theta.min() < np.pi * (1.0 - 1e-6):
        raise ValueError("samples must span a full oscillation period (pi)")

    design = np.column_stack([np.ones_like(theta), np.sin(2 * theta), np.cos(2 * theta)])
    (off0, a0, b0), *_ = np.linalg.lstsq(design, e, rcond=None)
    fss0 = 2.0 * float(np.hypot(a0, b0))
    phase0 = float(np.arctan2(b0, a0))

    def residual(p):
        offset, fss, phase = p
        return offset + 0.5 * fss * np.sin(2 * theta + phase) - e

    scale = max(fss0, float(np.std(e)), 1e-12)
    best, init_cost = _best_of_starts(
        residual, [[off0, fss0, phase0]],
        ([-np.inf, 0.0, -2 * np.pi], [np.inf, np.inf, 2 * np.pi]),
        [scale, scale, 1.0])
    offset, fss, phase = best.x
    phase = float(np.arctan2(np.sin(phase), np.cos(phase)))
    half, _, singular = _ci95_halfwidths(best.jac, best.cost, e.size)
    flags = frozenset({"singular-jacobian"}) if singular else frozenset()
    return FitResult(
        params={"fss": fss, "phase": phase, "offset": offset},
        ci95={"fss": half[1], "phase": half[2], "offset": half[0]},
        residual_norm=float(np.sqrt(2.0 * best.cost) / max(np.linalg.norm(e), 1e-300)),
        converged=bool(best.success and best.cost <= init_cost * (1.0 + 1e-9)),
        flags=flags)


# -------------------------------------------------- profile decomposition

def lorentzian_value(t, center: float, hwhm: float, height: float):
    """Peak-height Lorentzian; area is pi * height * hwhm."""
    return height * hwhm**2 / ((np.asarray(t, dtype=float) - center) ** 2 + hwhm**2)


def decompose_side_peak(profile: Histogram1D) -> FitResult:
    """Split a transmitted two-component profile into one early side pulse
    plus three delayed main-line Lorentzians (the extra two absorb the
    ringing that dispersion imprints on the slowed component).

    Shares are fitted areas over their sum. When fitted centers crowd closer
    than half the narrowest width the split is not trustworthy and the
    result carries the components-degenerate flag.
    """
    t = profile.centers
    y = profile.counts
    if y.max() <= 0:
        raise ValueError("empty profile")
    if y.size < 24:
        raise ValueError("profile too coarse to split into four components")

    from scipy.signal import find_peaks, peak_widths

    idx, props = find_peaks(y, height=0.02 * y.max(), prominence=0.01 * y.max())
    order = np.argsort(props["prominences"])[::-1][:4]
    keep = np.sort(np.asarray(idx)[order])
    if keep.size:
        half_bins = peak_widths(y, keep, rel_height=0.5)[0]
    else:
        keep = np.array([int(np.argmax(y))])
        half_bins = np.array([4.0])
    seeds = [(float(t[i]), max(0.5 * wb * profile.bin_width, profile.bin_width),
              float(y[i])) for i, wb in zip(keep, half_bins)]
    # pad missing components behind the last found peak
    while len(seeds) < 4:
        c, w, h = seeds[-1]
        seeds.append((c + 4.0 * w, w, max(0.05 * y.max(), 0.5 * h)))
    w_med = float(np.median([w for _, w, _ in seeds]))

    def residual(p):
        model = np.zeros_like(t)
        for j in range(4):
            c, w, h = p[3 * j], p[3 * j + 1], p[3 * j + 2]
            model = model + lorentzian_value(t, c, w, h)
        return model - y

    starts = []
    for wf in (1.0, 2.0):
        p0 = []
        for c, w, h in seeds:
            p0 += [c, wf * w, max(h, 0.01 * y.max())]
        starts.append(p0)
    lo = [t[0], profile.bin_width / 2.0, 0.0] * 4
    hi = [t[-1], profile.span / 2.0, np.inf] * 4
    x_scale = [w_med, w_med, y.max()] * 4
    best, init_cost = _best_of_starts(residual, starts, (lo, hi), x_scale)
    half, cov, singular = _ci95_halfwidths(best.jac, best.cost, y.size)

    comps = [(best.x[3 * j], best.x[3 * j + 1], best.x[3 * j + 2]) for j in range(4)]
    comps.sort(key=lambda c: c[0])
    side = comps[0]
    mains = comps[1:]
    side_area = np.pi * side[2] * side[1]
    main_areas = np.array([np.pi * h * w for _, w, h in mains])
    total = side_area + main_areas.sum()

    centers = np.array([c for c, _, _ in comps])
    fwhms = 2.0 * np.array([w for _, w, _ in comps])
    gaps = np.diff(np.sort(centers))
    flags = set()
    if singular:
        flags.add("singular-jacobian")
    if np.any(gaps < 0.5 * fwhms.min()):
        flags.add("components-degenerate")

    # delta-method interval on the side area from the (hwhm, height) block
    side_orig = int(np.argsort([best.x[3 * j] for j in range(4)])[0])
    ai = 3 * side_orig
    side_half = np.inf
    if cov is not None:
        g = np.zeros(12)
        g[ai + 1] = np.pi * side[2]
        g[ai + 2] = np.pi * side[1]
        block = g @ cov @ g
        if np.isfinite(block):
            side_half = student_t.ppf(0.975, y.size - 12) * np.sqrt(max(block, 0.0))

    return FitResult(
        params={"side_center": side[0], "side_hwhm": side[1],
                "side_height": side[2], "side_area": side_area,
                "side_share": side_area / total,
                "main_share": main_areas.sum() / total,
                "total_area": total},
        ci95={"side_center": half[ai] if np.isfinite(half[ai]) else np.inf,
              "side_area": side_half},
        residual_norm=float(np.sqrt(2.0 * best.cost) / np.linalg.norm(y)),
        converged=bool(best.success and best.cost <= init_cost * (1.0 + 1e-9)),
        series={"main_centers": np.array([c for c, _, _ in mains]),
                "main_hwhms": np.array([w for _, w, _ in mains]),
                "main_heights": np.array([h for _, _, h in mains]),
                "main_areas": main_areas},
        flags=frozenset(flags))


# ------------------------------------------------- synthetic generators

def make_voigt_scan(center: float, f_gauss: float, f_lorentz: float,
                    amplitude: float, offset: float, noise_sigma: float,
                    n_bins: int, span: float, seed: int) -> Histogram1D:
    rng = np.random.default_rng(seed)
    bin_width = span / n_bins
    x = center - span / 2.0 + (np.arange(n_bins) + 0.5) * bin_width
    sigma = max(f_gauss, 1e-9 * span) / FWHM_SIGMA
    y = offset + amplitude * voigt_value(x - center, sigma, 0.5 * f_lorentz)
    y = y + rng.normal(0.0, noise_sigma, n_bins)
    return Histogram1D(center - span / 2.0, bin_width, np.maximum(y, 0.0))


def make_emg_decay(lifetime: float, sigma: float, t0: float, peak_counts: float,
                   n_bins: int, span: float, start: float, seed: int) -> Histogram1D:
    """Poisson-sampled EMG decay scaled so the model peak is peak_counts."""
    rng = np.random.default_rng(seed)
    bin_width = span / n_bins
    t = start + (np.arange(n_bins) + 0.5) * bin_width
    shape = emg_value(t, t0, sigma, lifetime)
    scale = peak_counts / shape.max()
    return Histogram1D(start, bin_width, rng.poisson(scale * shape).astype(float))


def make_g2_histogram(center_ratio: float, n_side_peaks: int, rep_period: float,
                      sigma: float, rate: float, side_area_counts: float,
                      bin_width: float, seed: int) -> Histogram1D:
    """Comb of coincidence peaks, all side areas equal, center scaled by
    center_ratio. Poisson-sampled."""
    rng = np.random.default_rng(seed)
    half_span = (n_side_peaks + 0.5) * rep_period
    n_bins = int(np.ceil(2.0 * half_span / bin_width))
    start = -0.5 * n_bins * bin_width
    t = start + (np.arange(n_bins) + 0.5) * bin_width
    mean = np.zeros(n_bins)
    for k in range(-n_side_peaks, n_side_peaks + 1):
        weight = center_ratio if k == 0 else 1.0
        mean += weight * side_area_counts * bin_width * coincidence_peak_value(
            t, k * rep_period, sigma, rate)
    return Histogram1D(start, bin_width, rng.poisson(mean).astype(float))


def make_fss_series(fss: float, phase: float, offset: float, noise_sigma: float,
                    n_angles: int, seed: int):
    rng = np.random.default_rng(seed)
    theta = np.linspace(0.0, np.pi, n_angles)
    e = offset + 0.5 * fss * np.sin(2 * theta + phase)
    return theta, e + rng.normal(0.0, noise_sigma, n_angles)


def make_lorentzian_profile(components, noise_sigma: float, n_bins: int,
                            start: float, span: float, seed: int) -> Histogram1D:
    """components: iterable of (center, hwhm, height)."""
    rng = np.random.default_rng(seed)
    bin_width = span / n_bins
    t = start + (np.arange(n_bins) + 0.5) * bin_width
    y = np.zeros(n_bins)
    for c, w, h in components:
        y += lorentzian_value(t, c, w, h)
    y = y + rng.normal(0.0, noise_sigma, n_bins)
    return Histogram1D(start, bin_width, np.maximum(y, 0.0))
