//! Closed-form quantities: the epsilon adjustment between the squared and
//! unsquared distortion statements, tail rates for `|ZA|_F^2`, and target
//! dimensions `k` for each bulk guarantee.
//!
//! Constants that the underlying results leave unspecified (the `c` of the
//! sub-gaussian Hanson-Wright bound and the `c`, `C` of the operator norm
//! bound for iid coordinates) are parameters defaulting to 1. Any result that
//! relies on them carries `non_rigorous = true`.

use std::collections::BTreeMap;
use std::f64::consts::{E, LN_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::StableRanks;

/// Default for every unspecified absolute constant.
pub const DEFAULT_ABS_CONST: f64 = 1.0;

/// Largest distortion the theorems allow.
pub const MAX_EPS: f64 = 2.0 / 3.0;

/// Solution of the three requirements
/// `C+/e+^2 = C-/e-^2`, `(1-eps)^2/gamma = 1 - e-`, `(1+eps)^2/gamma = 1 + e+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSplit {
    pub eps: f64,
    pub theta: f64,
    pub eps_minus: f64,
    pub eps_plus: f64,
    pub gamma: f64,
}

impl EpsilonSplit {
    pub fn new(eps: f64, c_plus: f64, c_minus: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Input(format!("eps must lie in (0, 1), got {eps}")));
        }
        if !(c_plus > 0.0 && c_minus > 0.0 && c_plus.is_finite() && c_minus.is_finite()) {
            return Err(Error::Input(format!("C+ and C- must be positive, got {c_plus}, {c_minus}")));
        }
        Ok(Self::with_theta(eps, (c_plus / c_minus).sqrt()))
    }

    fn with_theta(eps: f64, theta: f64) -> Self {
        let s = (1.0 + eps).powi(2) + theta * (1.0 - eps).powi(2);
        let eps_minus = 4.0 * eps / s;
        Self { eps, theta, eps_minus, eps_plus: theta * eps_minus, gamma: s / (1.0 + theta) }
    }

    /// Gaussian entries: `C+ = 8`, `C- = 4`.
    pub fn gaussian(eps: f64) -> Result<Self> {
        Self::new(eps, 8.0, 4.0)
    }

    /// Sub-gaussian entries with symmetric constants.
    pub fn symmetric(eps: f64) -> Result<Self> {
        Self::new(eps, 1.0, 1.0)
    }

    /// Band `[1 - e-, 1 + e+]` for `|Z y_hat|^2 / k`.
    pub fn band(&self) -> (f64, f64) {
        (1.0 - self.eps_minus, 1.0 + self.eps_plus)
    }
}

pub fn epsilon_split(eps: f64, c_plus: f64, c_minus: f64) -> Result<EpsilonSplit> {
    EpsilonSplit::new(eps, c_plus, c_minus)
}

/// `C(eps) = 4(((1+eps)^2 + sqrt2 (1-eps)^2)/4)^2`, always below 2.25.
fn gaussian_c(eps: f64) -> f64 {
    let s = (1.0 + eps).powi(2) + SQRT_2 * (1.0 - eps).powi(2);
    4.0 * (s / 4.0).powi(2)
}

/// `(C(eps), gamma(eps))` for standard Gaussian `Z`.
pub fn gaussian_constants(eps: f64) -> Result<(f64, f64)> {
    if !(eps > 0.0 && eps <= MAX_EPS) {
        return Err(Error::Input(format!("eps must lie in (0, 2/3], got {eps}")));
    }
    let c = gaussian_c(eps);
    debug_assert!(c < 2.25);
    Ok((c, EpsilonSplit::gaussian(eps)?.gamma))
}

/// Which tail bound [`hw_tail_rate`] evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TailVariant {
    /// `2 exp(-c k min(eps^2 r_4 / K^4, eps r_inf / K^2))`.
    SubGaussian { k_psi2: f64, c: f64 },
    /// Upper tail for Gaussian `Z`.
    GaussianUpper,
    /// `exp(-k eps^2 r_4 / 4)`.
    GaussianLower,
}

/// The two Gaussian upper-tail bounds: `exp(-k eps^2 r_inf / 8)` (valid for
/// `eps < 1`, infinite otherwise) and `exp(-k (eps/8) min(eps r_4, r_inf))`.
pub fn gaussian_upper_rates(ranks: &StableRanks, k: usize, eps: f64) -> (f64, f64) {
    let k = k as f64;
    let plain = if eps < 1.0 { (-k * eps * eps * ranks.r_inf / 8.0).exp() } else { f64::INFINITY };
    let min_branch = (-k * eps / 8.0 * (eps * ranks.r_4).min(ranks.r_inf)).exp();
    (plain, min_branch)
}

/// Bound on `P{|ZA|_F^2 beyond (1 +- eps) k |A|_F^2}`. For the Gaussian upper
/// tail the smaller of the two available bounds is returned.
pub fn hw_tail_rate(ranks: &StableRanks, k: usize, eps: f64, variant: TailVariant) -> Result<f64> {
    if k == 0 || !(eps > 0.0) {
        return Err(Error::Input(format!("need k >= 1 and eps > 0, got k={k}, eps={eps}")));
    }
    let kf = k as f64;
    Ok(match variant {
        TailVariant::SubGaussian { k_psi2, c } => {
            if !(k_psi2 > 0.0 && c > 0.0) {
                return Err(Error::Input(format!("K and c must be positive, got {k_psi2}, {c}")));
            }
            let rate = (eps * eps * ranks.r_4 / k_psi2.powi(4)).min(eps * ranks.r_inf / k_psi2.powi(2));
            2.0 * (-c * kf * rate).exp()
        }
        TailVariant::GaussianUpper => {
            let (plain, min_branch) = gaussian_upper_rates(ranks, k, eps);
            plain.min(min_branch)
        }
        TailVariant::GaussianLower => (-kf * eps * eps * ranks.r_4 / 4.0).exp(),
    })
}

/// Law of the projection entries, as far as the target dimension cares.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ZDist {
    /// Explicit constants `C(eps)` and `gamma(eps)`.
    #[default]
    Gaussian,
    /// `C = ((1+eps^2)/2)^2 max(K^4, K^2) / c`, `gamma = 1 + eps^2`.
    SubGaussian {
        k_psi2: f64,
        #[serde(default = "default_abs_const")]
        c: f64,
    },
}

fn default_abs_const() -> f64 {
    DEFAULT_ABS_CONST
}

/// Constants entering a target dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsUsed {
    pub dist: ZDist,
    /// The leading coefficient: `C(eps)` or `C max(K^4, K^2)`.
    pub c_coefficient: f64,
    pub gamma: f64,
    pub split: EpsilonSplit,
    /// Absolute constants set by the caller or left at their default.
    pub overrides: BTreeMap<String, f64>,
    pub non_rigorous: bool,
}

/// Leading constant and `gamma` for `dist`. `eps` only needs to lie in `(0, 1)`;
/// the `eps <= 2/3` requirement is reported as a constraint by the callers.
pub fn theorem_constants(eps: f64, dist: ZDist) -> Result<ConstantsUsed> {
    match dist {
        ZDist::Gaussian => {
            let split = EpsilonSplit::gaussian(eps)?;
            Ok(ConstantsUsed {
                dist,
                c_coefficient: gaussian_c(eps),
                gamma: split.gamma,
                split,
                overrides: BTreeMap::new(),
                non_rigorous: false,
            })
        }
        ZDist::SubGaussian { k_psi2, c } => {
            if !(k_psi2 > 0.0 && c > 0.0) {
                return Err(Error::Input(format!("K and c must be positive, got {k_psi2}, {c}")));
            }
            let split = EpsilonSplit::symmetric(eps)?;
            let base = ((1.0 + eps * eps) / 2.0).powi(2) / c;
            Ok(ConstantsUsed {
                dist,
                c_coefficient: base * k_psi2.powi(4).max(k_psi2.powi(2)),
                gamma: split.gamma,
                split,
                overrides: BTreeMap::from([("hanson_wright_c".to_string(), c)]),
                non_rigorous: true,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub satisfied: bool,
    /// Positive when satisfied with room to spare, negative when violated.
    pub slack: f64,
}

impl Constraint {
    /// `lhs <= rhs`.
    fn le(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.to_string(), satisfied: lhs <= rhs, slack: rhs - lhs }
    }

    /// `lhs < rhs`.
    fn lt(name: &str, lhs: f64, rhs: f64) -> Self {
        Self { name: name.to_string(), satisfied: lhs < rhs, slack: rhs - lhs }
    }

    /// `x` is a positive integer.
    fn positive_integer(name: &str, x: f64) -> Self {
        let off = (x - x.round()).abs();
        let ok = off <= 1e-9 * x.abs().max(1.0) && x.round() >= 1.0;
        Self { name: name.to_string(), satisfied: ok, slack: if ok { 0.0 } else { -off.max(1.0 - x) } }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetDimResult {
    pub theorem: String,
    pub k: u64,
    /// Formula value before the ceiling.
    pub k_real: f64,
    pub constants: ConstantsUsed,
    pub constraints: Vec<Constraint>,
    /// Parameter repairs made to reach integrality, in order.
    pub adjustments: Vec<String>,
    /// Intermediate quantities (`t_prime`, `M`, ...).
    pub derived: BTreeMap<String, f64>,
}

impl TargetDimResult {
    fn new(theorem: &str, k_real: f64, constants: ConstantsUsed, constraints: Vec<Constraint>) -> Self {
        let k = if k_real.is_finite() { k_real.ceil().max(1.0) as u64 } else { u64::MAX };
        Self {
            theorem: theorem.to_string(),
            k,
            k_real,
            constants,
            constraints,
            adjustments: Vec::new(),
            derived: BTreeMap::new(),
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.constraints.iter().all(|c| c.satisfied)
    }

    pub fn violations(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| !c.satisfied)
    }

    /// Turns any violated constraint into an [`Error::Constraint`].
    pub fn require_satisfied(self) -> Result<Self> {
        let bad: Vec<String> = self.violations().map(|c| format!("{} (slack {:.6})", c.name, c.slack)).collect();
        if bad.is_empty() {
            Ok(self)
        } else {
            Err(Error::Constraint(format!("{}: {}", self.theorem, bad.join(", "))))
        }
    }
}

fn check_open_unit(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must lie in (0, 1), got {x}")))
    }
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Input(format!("{name} must be positive and finite, got {x}")))
    }
}

fn eps_constraint(eps: f64) -> Constraint {
    Constraint::le("eps <= 2/3", eps, MAX_EPS)
}

/// Free decompositions, batches of `M` raw difference vectors with minimum
/// minibatch stable rank `r_inf = R_inf(eta M)`:
/// `k >= C/eps^2 (log(2e/eta) eta M / R + log(N^2/(M delta)) / R)`.
pub fn target_dim_free(
    n: usize,
    m: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    r_inf: f64,
    dist: ZDist,
) -> Result<TargetDimResult> {
    check_open_unit("eta", eta)?;
    check_open_unit("delta", delta)?;
    check_positive("R_inf", r_inf)?;
    let constants = theorem_constants(eps, dist)?;
    let eta_m = eta * m as f64;
    let lead = constants.c_coefficient / (eps * eps);
    let n2 = (n as f64).powi(2);
    let k_real = lead * ((2.0 * E / eta).ln() * eta_m / r_inf + (n2 / (m as f64 * delta)).ln() / r_inf);
    let constraints = vec![
        Constraint::positive_integer("eta*M integer", eta_m),
        eps_constraint(eps),
        Constraint::le("R_inf >= 1", 1.0, r_inf),
        Constraint::le("R_inf <= eta*M", r_inf, eta_m),
    ];
    Ok(TargetDimResult::new("free", k_real, constants, constraints))
}

/// Unit-normalized decompositions with `r_hat = R_hat_inf(M)`:
/// `k >= C/eps^2 (log(2e/eta) M / R + log(N^2/(M delta)) / max(eta R, 1))`.
pub fn target_dim_unit(
    n: usize,
    m: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    r_hat_inf: f64,
    dist: ZDist,
) -> Result<TargetDimResult> {
    check_open_unit("eta", eta)?;
    check_open_unit("delta", delta)?;
    check_positive("R_hat_inf", r_hat_inf)?;
    let constants = theorem_constants(eps, dist)?;
    let mf = m as f64;
    let lead = constants.c_coefficient / (eps * eps);
    let n2 = (n as f64).powi(2);
    let k_real = lead * ((2.0 * E / eta).ln() * mf / r_hat_inf + (n2 / (mf * delta)).ln() / (eta * r_hat_inf).max(1.0));
    let constraints = vec![
        Constraint::positive_integer("eta*M integer", eta * mf),
        eps_constraint(eps),
        Constraint::le("R_hat_inf >= 1", 1.0, r_hat_inf),
        Constraint::le("R_hat_inf <= M", r_hat_inf, mf),
    ];
    Ok(TargetDimResult::new("unit", k_real, constants, constraints))
}

/// Standard simplex in `R^D`:
/// `k = 2C/eps^2 (log(2e/eta) + log(D/delta) / max(eta D, 1))`.
///
/// `eta = 1` is accepted (and flagged) so the clamp can be exercised.
pub fn target_dim_simplex(d: usize, eta: f64, eps: f64, delta: f64, dist: ZDist) -> Result<TargetDimResult> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::Input(format!("eta must lie in (0, 1], got {eta}")));
    }
    check_open_unit("delta", delta)?;
    if d == 0 {
        return Err(Error::Input("D must be positive".into()));
    }
    let constants = theorem_constants(eps, dist)?;
    let df = d as f64;
    let k_real =
        2.0 * constants.c_coefficient / (eps * eps) * ((2.0 * E / eta).ln() + (df / delta).ln() / (eta * df).max(1.0));
    let constraints = vec![eps_constraint(eps), Constraint::lt("eta < 1", eta, 1.0)];
    let mut out = TargetDimResult::new("simplex", k_real, constants, constraints);
    out.derived.insert("r_hat_inf_lower".into(), df / 2.0);
    Ok(out)
}

/// Absolute constants of the iid-coordinates argument: `c` from Bernstein's
/// inequality and `C` from the operator norm bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidConstants {
    #[serde(default = "default_abs_const")]
    pub c: f64,
    #[serde(default = "default_abs_const", rename = "C")]
    pub big_c: f64,
}

impl Default for IidConstants {
    fn default() -> Self {
        Self { c: DEFAULT_ABS_CONST, big_c: DEFAULT_ABS_CONST }
    }
}

/// Data with iid sub-gaussian coordinates of norm `psi2_xi`, batches of size
/// `M = D`:
/// `k >= C/eps^2 * 4 C'^2 psi^2 (1 + (1+alpha)^2)/(1-t) * (log(2e/eta) + log(N^2/(D delta))/(eta D))`.
#[allow(clippy::too_many_arguments)]
pub fn target_dim_subgaussian_iid(
    n: usize,
    d: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    alpha: f64,
    t: f64,
    psi2_xi: f64,
    dist: ZDist,
    abs: IidConstants,
) -> Result<TargetDimResult> {
    check_open_unit("eta", eta)?;
    check_open_unit("delta", delta)?;
    check_open_unit("t", t)?;
    check_positive("alpha", alpha)?;
    check_positive("psi2 norm of xi", psi2_xi)?;
    check_positive("c", abs.c)?;
    check_positive("C", abs.big_c)?;
    let mut constants = theorem_constants(eps, dist)?;
    constants.overrides.insert("bernstein_c".into(), abs.c);
    constants.overrides.insert("operator_norm_C".into(), abs.big_c);
    constants.non_rigorous = true;

    let (nf, df) = (n as f64, d as f64);
    let log_term = (nf * nf / (df * delta)).ln();
    let log_eta = (2.0 * E / eta).ln();
    let psi_sq = psi2_xi * psi2_xi;
    let factor = 4.0 * abs.big_c.powi(2) * psi_sq * (1.0 + (1.0 + alpha).powi(2)) / (1.0 - t);
    let k_real = constants.c_coefficient / (eps * eps) * factor * (log_eta + log_term / (eta * df));

    let d_bernstein = (2.0 * psi_sq + 1.0 / LN_2).powi(2) / (abs.c * t * t) * (log_term / (eta * df) + log_eta);
    let constraints = vec![
        Constraint::positive_integer("eta*D integer", eta * df),
        eps_constraint(eps),
        Constraint::le("N >= D", df, nf),
        Constraint::le("D >= log(N^2/(D delta))/alpha^2", log_term / (alpha * alpha), df),
        Constraint::le("D >= Bernstein lower bound", d_bernstein, df),
    ];
    let mut out = TargetDimResult::new("subgaussian-iid", k_real, constants, constraints);
    out.derived.insert("d_lower_alpha".into(), log_term / (alpha * alpha));
    out.derived.insert("d_lower_bernstein".into(), d_bernstein);
    Ok(out)
}

/// `alpha + 4/3 + sqrt(2 alpha)`.
pub fn c_alpha(alpha: f64) -> f64 {
    alpha + 4.0 / 3.0 + (2.0 * alpha).sqrt()
}

/// `t' = 8 alpha r_hat log(3(N-1)/(2 delta)) / (zeta (N-1))`.
pub fn t_prime(n: usize, zeta: f64, delta: f64, alpha: f64, r_hat: f64) -> f64 {
    let n1 = (n - 1) as f64;
    8.0 * alpha * r_hat * (3.0 * n1 / (2.0 * delta)).ln() / (zeta * n1)
}

/// Parameters of the unit-sphere guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSphereParams {
    pub n: usize,
    pub d: usize,
    pub eta: f64,
    pub zeta: f64,
    pub eps: f64,
    pub delta: f64,
    pub alpha: f64,
    pub r_hat: f64,
    #[serde(default)]
    pub dist: ZDist,
}

/// Arbitrary data, batches sized from the intrinsic dimension `r_hat` of the
/// unit difference vector.
///
/// Order of evaluation: `t'` (independent of `M`), then `M = ceil(alpha r_hat
/// (log(6e/zeta) + log D)/(1 - t'))`, then `eta` and `zeta` are rounded down
/// until `eta M` and `zeta floor((N-1)/(4M))` are integers. Rounding `zeta`
/// changes `t'` and `M`, so the last two steps repeat until nothing moves.
pub fn target_dim_unit_sphere(p: UnitSphereParams) -> Result<TargetDimResult> {
    unit_sphere_impl(p, "unit-sphere")
}

/// The unit-sphere bound with `r_hat = D`, valid when the data has iid coordinates.
pub fn target_dim_iid_coords(mut p: UnitSphereParams) -> Result<TargetDimResult> {
    p.r_hat = p.d as f64;
    unit_sphere_impl(p, "iid-coords")
}

fn unit_sphere_impl(p: UnitSphereParams, theorem: &str) -> Result<TargetDimResult> {
    check_open_unit("eta", p.eta)?;
    check_open_unit("zeta", p.zeta)?;
    check_open_unit("delta", p.delta)?;
    check_positive("alpha", p.alpha)?;
    check_positive("r_hat", p.r_hat)?;
    if p.n < 2 || p.d < 2 {
        return Err(Error::Input(format!("need N >= 2 and D >= 2, got N={}, D={}", p.n, p.d)));
    }
    let constants = theorem_constants(p.eps, p.dist)?;
    let n1 = (p.n - 1) as f64;
    let df = p.d as f64;
    let log_d = df.ln();

    let mut adjustments = Vec::new();
    let mut zeta = p.zeta;
    let mut eta = p.eta;
    let mut iteration = 0;
    let (tp, m_real, m, n_batches) = loop {
        let tp = t_prime(p.n, zeta, p.delta, p.alpha, p.r_hat);
        if tp >= 1.0 {
            let zeta_needed = 8.0 * p.alpha * p.r_hat * (3.0 * n1 / (2.0 * p.delta)).ln() / n1;
            let n_hint = if zeta < p.zeta { " after rounding zeta down" } else { "" };
            return Err(Error::Constraint(format!(
                "t' = {tp:.4} >= 1{n_hint} (N={}, zeta={zeta}, r_hat={}, alpha={}); \
                 increase N or zeta (zeta > {zeta_needed:.4} needed at this N) or lower alpha",
                p.n, p.r_hat, p.alpha
            )));
        }
        let m_real = p.alpha * p.r_hat * ((6.0 * E / zeta).ln() + log_d) / (1.0 - tp);
        let m = m_real.ceil().max(1.0) as usize;
        let n_batches = (p.n - 1) / (4 * m);
        let zeta_n = zeta * n_batches as f64;
        if n_batches == 0 || zeta_n < 1.0 - 1e-9 {
            break (tp, m_real, m, n_batches);
        }
        let rounded = (zeta_n + 1e-9).floor();
        if (zeta_n - rounded).abs() <= 1e-9 {
            break (tp, m_real, m, n_batches);
        }
        let new_zeta = rounded / n_batches as f64;
        adjustments.push(format!("zeta {zeta} -> {new_zeta} so that zeta*floor((N-1)/(4M)) = {rounded}"));
        zeta = new_zeta;
        iteration += 1;
        if iteration > 64 {
            return Err(Error::Numeric { message: "zeta rounding did not settle".into(), estimate: zeta });
        }
    };

    let mf = m as f64;
    let eta_m = eta * mf;
    if eta_m >= 1.0 && (eta_m - eta_m.round()).abs() > 1e-9 {
        let new_eta = (eta_m + 1e-9).floor() / mf;
        adjustments.push(format!("eta {eta} -> {new_eta} so that eta*M = {}", (eta_m + 1e-9).floor()));
        eta = new_eta;
    }

    let ca = c_alpha(p.alpha);
    let first = (2.0 * E / eta).ln() * ((6.0 * E / zeta).ln() + log_d) / (1.0 - tp);
    let second =
        ((p.n as f64).powi(2) / (p.alpha * p.r_hat * p.delta * log_d)).ln() / (p.alpha * (eta * p.r_hat).max(1.0));
    let k_real = constants.c_coefficient / (p.eps * p.eps) * ca * (first + second);

    let constraints = vec![
        eps_constraint(p.eps),
        Constraint::le("zeta <= 1/2", zeta, 0.5),
        Constraint::lt("t' < 1", tp, 1.0),
        Constraint::le("M <= (N-1)/8", mf, n1 / 8.0),
        Constraint::positive_integer("eta*M integer", eta * mf),
        Constraint::positive_integer("zeta*floor((N-1)/(4M)) integer", zeta * n_batches as f64),
        Constraint::le("r_hat >= 1", 1.0, p.r_hat),
        Constraint::le("r_hat <= D", p.r_hat, df),
    ];
    let mut out = TargetDimResult::new(theorem, k_real, constants, constraints);
    out.adjustments = adjustments;
    out.derived = BTreeMap::from([
        ("t_prime".to_string(), tp),
        ("M_real".to_string(), m_real),
        ("M".to_string(), mf),
        ("n".to_string(), n_batches as f64),
        ("eta_used".to_string(), eta),
        ("zeta_used".to_string(), zeta),
        ("c_alpha".to_string(), ca),
        ("r_hat".to_string(), p.r_hat),
    ]);
    Ok(out)
}

/// Scans `alpha` over `grid` and returns the feasible choice with the smallest
/// target dimension. Infeasible values (`t' >= 1`) are skipped.
pub fn best_alpha(p: UnitSphereParams, grid: &[f64]) -> Result<(f64, TargetDimResult)> {
    let mut best: Option<(f64, TargetDimResult)> = None;
    let mut last_err = None;
    for &alpha in grid {
        match target_dim_unit_sphere(UnitSphereParams { alpha, ..p }) {
            Ok(r) => {
                if best.as_ref().is_none_or(|(_, b)| r.k_real < b.k_real) {
                    best = Some((alpha, r));
                }
            }
            Err(e @ Error::Constraint(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Input("empty alpha grid".into())))
}

/// Evenly spaced `alpha` grid on `[0.5, 8]`.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..=150).map(|i| 0.5 + 0.05 * i as f64).collect()
}

/// Relative covariance deviation bound
/// `(4K^2/3) r (u + log D)/M + sqrt(2 K^2 r (u + log D)/M)`.
pub fn tau_plus(u: f64, r: f64, m: f64, k_bound: f64, d: usize) -> Result<f64> {
    if !(u > 0.0 && r >= 1.0 && m >= 1.0 && k_bound >= 1.0 && d >= 1) {
        return Err(Error::Input(format!(
            "tau_plus needs u > 0, r >= 1, M >= 1, K >= 1, D >= 1; got u={u}, r={r}, M={m}, K={k_bound}, D={d}"
        )));
    }
    let x = k_bound * k_bound * r * (u + (d as f64).ln()) / m;
    Ok(4.0 / 3.0 * x + (2.0 * x).sqrt())
}

/// `j log(eM/j)`, an upper bound on `log C(M, j)` for `1 <= j <= M/2`.
pub fn log_binom_bound(m: usize, j: usize) -> Result<f64> {
    if j == 0 || j > m {
        return Err(Error::Input(format!("need 1 <= j <= M, got M={m}, j={j}")));
    }
    let (mf, jf) = (m as f64, j as f64);
    Ok(jf * (E * mf / jf).ln())
}

/// Bound on `P{(1-zeta)n-th order statistic of n iid batch deviations > tau_+(u)}`:
/// `exp(zeta n (log(e/zeta) + log 2 - u))`.
pub fn batch_orderstat_bound(zeta: f64, n: usize, u: f64) -> f64 {
    let zn = zeta * n as f64;
    (zn * ((E / zeta).ln() + LN_2 - u)).exp()
}

/// The same bound across subgraphs of unequal size, where `log(e/zeta)` becomes
/// `log(3e/zeta)`.
pub fn subgraph_orderstat_bound(zeta: f64, n: usize, u: f64) -> f64 {
    let zn = zeta * n as f64;
    (zn * ((3.0 * E / zeta).ln() + LN_2 - u)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetractionBound {
    /// `1/(eps r) + p(eps)`, an upper bound on `|Sigma_hat|`.
    pub sigma_hat_upper: f64,
    /// `r / (1/eps + r p(eps))`, a lower bound on `r_hat`.
    pub r_hat_lower: f64,
}

/// Relates the intrinsic dimension `r` of `y` to that of `y/|y|` through the
/// small-ball probability `p_eps = P{|y|^2 < eps E|y|^2}`.
pub fn retraction_bound(r: f64, p_eps: f64, eps: f64) -> Result<RetractionBound> {
    check_open_unit("eps", eps)?;
    if !(r >= 1.0) || !(0.0..=1.0).contains(&p_eps) {
        return Err(Error::Input(format!("need r >= 1 and p in [0, 1], got r={r}, p={p_eps}")));
    }
    Ok(RetractionBound { sigma_hat_upper: 1.0 / (eps * r) + p_eps, r_hat_lower: r / (1.0 / eps + r * p_eps) })
}

/// Target-dimension evaluators addressable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem {
    Free,
    Unit,
    Simplex,
    SubgaussianIid,
    UnitSphere,
    IidCoords,
}

impl std::str::FromStr for Theorem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "free" => Theorem::Free,
            "unit" => Theorem::Unit,
            "simplex" => Theorem::Simplex,
            "subgaussian-iid" => Theorem::SubgaussianIid,
            "unit-sphere" => Theorem::UnitSphere,
            "iid-coords" => Theorem::IidCoords,
            other => return Err(Error::Input(format!("unknown theorem {other:?}"))),
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecompParams {
    n: usize,
    m: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    #[serde(alias = "r_inf", alias = "r_hat_inf")]
    r: f64,
    #[serde(default)]
    dist: ZDist,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimplexParams {
    d: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    #[serde(default)]
    dist: ZDist,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IidParams {
    n: usize,
    d: usize,
    eta: f64,
    eps: f64,
    delta: f64,
    alpha: f64,
    t: f64,
    psi2_xi: f64,
    #[serde(default)]
    dist: ZDist,
    #[serde(default)]
    constants: IidConstants,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct IidCoordsParams {
    n: usize,
    d: usize,
    eta: f64,
    zeta: f64,
    eps: f64,
    delta: f64,
    alpha: f64,
    #[serde(default)]
    dist: ZDist,
}

/// Evaluates `theorem` on JSON parameters (field names as in the functions above).
pub fn evaluate(theorem: Theorem, params: &serde_json::Value) -> Result<TargetDimResult> {
    let p = params.clone();
    match theorem {
        Theorem::Free => {
            let q: DecompParams = serde_json::from_value(p)?;
            target_dim_free(q.n, q.m, q.eta, q.eps, q.delta, q.r, q.dist)
        }
        Theorem::Unit => {
            let q: DecompParams = serde_json::from_value(p)?;
            target_dim_unit(q.n, q.m, q.eta, q.eps, q.delta, q.r, q.dist)
        }
        Theorem::Simplex => {
            let q: SimplexParams = serde_json::from_value(p)?;
            target_dim_simplex(q.d, q.eta, q.eps, q.delta, q.dist)
        }
        Theorem::SubgaussianIid => {
            let q: IidParams = serde_json::from_value(p)?;
            target_dim_subgaussian_iid(q.n, q.d, q.eta, q.eps, q.delta, q.alpha, q.t, q.psi2_xi, q.dist, q.constants)
        }
        Theorem::UnitSphere => target_dim_unit_sphere(serde_json::from_value(p)?),
        Theorem::IidCoords => {
            let q: IidCoordsParams = serde_json::from_value(p)?;
            target_dim_iid_coords(UnitSphereParams {
                n: q.n,
                d: q.d,
                eta: q.eta,
                zeta: q.zeta,
                eps: q.eps,
                delta: q.delta,
                alpha: q.alpha,
                r_hat: q.d as f64,
                dist: q.dist,
            })
        }
    }
}
