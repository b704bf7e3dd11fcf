//! Qubit-overhead bookkeeping for error-corrected tree networks.
//!
//! Two numbers are always produced side by side: an exact count built from
//! the integer code parameter `t`, and the asymptotic closed form whose
//! exponent `log_k a_k` carries the scaling claims.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::deployment::{DeploymentMode, DeploymentPlan};
use crate::topology::TreeTopology;
use crate::{Error, Result};

/// Code family. The GV-saturating CSS family has encoding rate `19t`, the
/// surface code `(2t+1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodeFamily {
    CssGv,
    Surface,
}

impl CodeFamily {
    /// Encoding exponent J.
    pub fn exponent(&self) -> u32 {
        match self {
            CodeFamily::CssGv => 1,
            CodeFamily::Surface => 2,
        }
    }

    /// Leading coefficient of the encoding rate in `t^J` (19 or 4).
    pub fn rate_coefficient(&self) -> f64 {
        match self {
            CodeFamily::CssGv => 19.0,
            CodeFamily::Surface => 4.0,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CodeFamily::CssGv => "css_gv",
            CodeFamily::Surface => "surface",
        }
    }
}

impl FromStr for CodeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "css" | "css_gv" | "gv" | "j1" => Ok(CodeFamily::CssGv),
            "surface" | "sc" | "surface_code" | "j2" => Ok(CodeFamily::Surface),
            _ => Err(Error::param("family", s, "css_gv or surface")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Router insertion loss dominates, no repeaters.
    Dense,
    /// Propagation loss dominates, repeaters every `l0`.
    Sparse,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Dense => "dense",
            Regime::Sparse => "sparse",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Regime::Dense),
            "sparse" => Ok(Regime::Sparse),
            _ => Err(Error::param("regime", s, "dense or sparse")),
        }
    }
}

/// Error-correction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcConfig {
    pub epsilon: f64,
    pub epsilon_th: f64,
    /// Target end-to-end error. Defaults to `epsilon`.
    pub epsilon_0: f64,
    pub family: CodeFamily,
    /// Nesting level r.
    pub r: u32,
    /// Fixes `t` instead of solving for it; `Some(0)` means no encoding.
    #[serde(default)]
    pub t_override: Option<u32>,
    /// Constant in front of the logical error rate, normally 1.
    #[serde(default = "one")]
    pub prefactor: f64,
}

fn one() -> f64 {
    1.0
}

impl EcConfig {
    /// `epsilon / epsilon_th = 0.1`, `epsilon_0 = epsilon`, no nesting.
    pub fn preset(family: CodeFamily) -> Self {
        EcConfig { epsilon: 1e-3, epsilon_th: 1e-2, epsilon_0: 1e-3, family, r: 1, t_override: None, prefactor: 1.0 }
    }

    /// Plain routing without any code.
    pub fn unencoded() -> Self {
        EcConfig { t_override: Some(0), ..EcConfig::preset(CodeFamily::CssGv) }
    }

    pub fn with_nesting(mut self, r: u32) -> Self {
        self.r = r;
        self
    }

    pub fn j(&self) -> u32 {
        self.family.exponent()
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.epsilon, self.epsilon_th, self.epsilon_0, self.prefactor].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("epsilon", self.epsilon, "finite error rates"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::param("epsilon", self.epsilon, "> 0"));
        }
        if !(self.epsilon_th <= 1.0 && self.epsilon_th > 0.0) {
            return Err(Error::param("epsilon_th", self.epsilon_th, "in (0, 1]"));
        }
        if self.epsilon >= self.epsilon_th {
            return Err(Error::NoThreshold { epsilon: self.epsilon, epsilon_th: self.epsilon_th });
        }
        if !(self.epsilon_0 > 0.0) {
            return Err(Error::param("epsilon_0", self.epsilon_0, "> 0"));
        }
        if self.r < 1 {
            return Err(Error::param("r", self.r, ">= 1"));
        }
        if !(self.prefactor > 0.0) {
            return Err(Error::param("prefactor", self.prefactor, "> 0"));
        }
        Ok(())
    }

    /// `ln(epsilon_th / epsilon)`, positive for a valid config.
    fn suppression(&self) -> f64 {
        (self.epsilon_th / self.epsilon).ln()
    }
}

/// Logical error per swap after `r` levels of a `t`-correcting code.
pub fn logical_error(cfg: &EcConfig, t: u32) -> f64 {
    let ratio = cfg.epsilon / cfg.epsilon_th;
    let power = (f64::from(t) + 1.0).powi(cfg.r as i32);
    cfg.prefactor * cfg.epsilon_th * ratio.powf(power)
}

/// Longest-path swap count.
pub fn swap_count(k: u32, n: u32, a_k: f64, regime: Regime) -> Result<f64> {
    if k < 2 {
        return Err(Error::param("k", k, ">= 2"));
    }
    if n < 1 {
        return Err(Error::param("n", n, ">= 1"));
    }
    match regime {
        Regime::Dense => Ok(2.0 * f64::from(n)),
        Regime::Sparse => {
            if !(a_k.is_finite() && a_k > 1.0) {
                return Err(Error::param("a_k", a_k, "> 1 in the sparse regime (use the dense regime when a_k = 1)"));
            }
            Ok(2.0 * geometric_sum(a_k, n))
        }
    }
}

/// `(a^n - 1)/(a - 1)`, accurate near `a = 1`.
fn geometric_sum(a: f64, n: u32) -> f64 {
    let x = a - 1.0;
    (f64::from(n) * a.ln()).exp_m1() / x
}

/// Solution of the target-error condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TSolution {
    /// Smallest integer code parameter meeting the target.
    pub t: u32,
    /// Real-valued root of the same condition.
    pub continuous: f64,
    /// Simplified closed form used by the scaling argument.
    pub approx: f64,
}

/// Smallest integer `t` with `N_swap * eps_L(t) <= eps_0`.
pub fn required_t(cfg: &EcConfig, k: u32, n: u32, a_k: f64, regime: Regime) -> Result<TSolution> {
    cfg.validate()?;
    let n_swap = swap_count(k, n, a_k, regime)?;
    let q = cfg.suppression();
    // (t+1)^r >= x
    let x = (n_swap.ln() + cfg.prefactor.ln() + cfg.epsilon_th.ln() - cfg.epsilon_0.ln()) / q;
    let r = f64::from(cfg.r);
    let continuous = if x > 1.0 { x.powf(1.0 / r) - 1.0 } else { 0.0 };
    let mut t = continuous.ceil().max(0.0) as u32;
    // undo float noise when the root sits on an integer
    while t > 0 && (f64::from(t)).powf(r) >= x * (1.0 - 1e-12) {
        t -= 1;
    }
    while (f64::from(t) + 1.0).powf(r) < x * (1.0 - 1e-12) {
        t += 1;
    }

    let leading = match regime {
        Regime::Dense => n_swap.ln(),
        Regime::Sparse => f64::from(n) * a_k.ln(),
    };
    let base = (leading + (cfg.epsilon / cfg.epsilon_0).ln()) / q;
    let approx = if cfg.r == 1 { base } else { (base + 1.0).max(0.0).powf(1.0 / r) - 1.0 };
    Ok(TSolution { t, continuous, approx })
}

/// Physical qubits per logical qubit.
pub fn encoding_rate(family: CodeFamily, t: u32, r: u32) -> f64 {
    if t == 0 {
        return 1.0;
    }
    encoding_rate_real(family, f64::from(t), r)
}

/// [`encoding_rate`] extended to non-integer `t`.
pub fn encoding_rate_real(family: CodeFamily, t: f64, r: u32) -> f64 {
    if t <= 0.0 {
        return 1.0;
    }
    let r = r as i32;
    match family {
        CodeFamily::CssGv => (19.0 * t).powi(r),
        CodeFamily::Surface => (2.0 * t + 1.0).powi(2 * r),
    }
}

/// `C_J` prefactor of the sparse closed form.
pub fn closed_form_coefficient(family: CodeFamily, a_k: f64) -> f64 {
    let l = a_k.log10();
    match family {
        CodeFamily::CssGv => 38.0 * l / (a_k - 1.0),
        CodeFamily::Surface => 8.0 * l * l / (a_k - 1.0),
    }
}

/// `log_k a_k`.
pub fn scaling_exponent(k: u32, a_k: f64) -> f64 {
    a_k.ln() / f64::from(k).ln()
}

/// Sparse closed form `C_J * N^(log_k a) * (log_k N)^J`.
pub fn closed_form_per_node(family: CodeFamily, k: u32, n: u32, a_k: f64) -> f64 {
    let big_n = f64::from(k).powi(n as i32);
    closed_form_coefficient(family, a_k) * big_n.powf(scaling_exponent(k, a_k)) * f64::from(n).powi(family.exponent() as i32)
}

/// Nested closed form, written around natural logarithms with
/// `t = (n ln a / ln 10)^(1/r)` at every level.
pub fn nested_closed_form_per_node(family: CodeFamily, k: u32, n: u32, a_k: f64, r: u32) -> f64 {
    let big_n = f64::from(k).powi(n as i32);
    let j = family.exponent() as i32;
    let nat = 2.0 / std::f64::consts::LN_10;
    let level = f64::from(n) * a_k.ln() / std::f64::consts::LN_10;
    let rate = family.rate_coefficient().powi(r as i32) * level.powi(j);
    match family {
        // 0.86 * ln a / (a-1) * 19^r * N^(log_k a) * log_k N
        CodeFamily::CssGv => {
            nat * a_k.ln() / (a_k - 1.0) * 19f64.powi(r as i32) * big_n.powf(scaling_exponent(k, a_k)) * f64::from(n)
        }
        CodeFamily::Surface => 2.0 * rate * big_n.powf(scaling_exponent(k, a_k)) / (a_k - 1.0),
    }
}

/// Dense closed forms: `2 log_k N` unencoded, otherwise
/// `2 c [log10(2 log_k N)]^J log_k N`.
pub fn dense_closed_form_per_node(family: CodeFamily, n: u32, encoded: bool) -> f64 {
    let n = f64::from(n);
    if !encoded {
        return 2.0 * n;
    }
    let t = (2.0 * n).log10();
    2.0 * family.rate_coefficient() * t.powi(family.exponent() as i32) * n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub k: u32,
    pub n: u32,
    #[serde(rename = "N")]
    pub end_nodes: u64,
    pub mode: DeploymentMode,
    pub regime: Regime,
    pub family: CodeFamily,
    pub r: u32,
    pub growth_rate: f64,
    /// `log_k a_k`; zero in the dense regime.
    pub exponent: f64,
    #[serde(rename = "N_swap")]
    pub n_swap: f64,
    pub t: u32,
    pub t_continuous: f64,
    pub t_approx: f64,
    pub encoding_rate: f64,
    pub total_qubits: f64,
    pub per_node: f64,
    /// Same bookkeeping with the real-valued `t`.
    pub per_node_continuous: f64,
    pub per_node_closed_form: f64,
    /// Qubits per end node per `l0^2`.
    pub area_normalized: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Qubit budget of a deployed tree. Memory is counted per unit of buffering.
pub fn overhead(tree: &TreeTopology, plan: &DeploymentPlan, cfg: &EcConfig, regime: Regime) -> Result<OverheadReport> {
    cfg.validate()?;
    let (k, n) = (tree.k(), tree.height());
    if plan.k != k || plan.n != n {
        return Err(Error::param("plan", format!("k={} n={}", plan.k, plan.n), "a plan built for the same tree"));
    }
    let a = plan.growth_rate;
    let mut warnings = Vec::new();
    if regime == Regime::Dense && a > 1.0 {
        warnings.push(format!("dense regime ignores the plan's growth rate {a:.6}; repeaters are not counted"));
    }
    let n_swap = swap_count(k, n, a, regime)?;
    let (t, t_continuous, t_approx) = match cfg.t_override {
        Some(t) => (t, f64::from(t), f64::from(t)),
        None => {
            let s = required_t(cfg, k, n, a, regime)?;
            (s.t, s.continuous, s.approx)
        }
    };
    let f = encoding_rate(cfg.family, t, cfg.r);
    let f_cont = encoding_rate_real(cfg.family, t_continuous, cfg.r);
    // 2 memories per router or repeater layer per end node
    let per_node = f * n_swap;
    let per_node_continuous = f_cont * n_swap;
    let encoded = t > 0;
    let per_node_closed_form = match regime {
        Regime::Dense => dense_closed_form_per_node(cfg.family, n, encoded),
        Regime::Sparse if !encoded => 2.0 * a.powi(n as i32) / (a - 1.0),
        Regime::Sparse if cfg.r == 1 => closed_form_per_node(cfg.family, k, n, a),
        Regime::Sparse => nested_closed_form_per_node(cfg.family, k, n, a, cfg.r),
    };
    let end_nodes = tree.leaves();
    let total_qubits = per_node * end_nodes as f64;
    Ok(OverheadReport {
        k,
        n,
        end_nodes,
        mode: plan.mode,
        regime,
        family: cfg.family,
        r: cfg.r,
        growth_rate: a,
        exponent: match regime {
            Regime::Dense => 0.0,
            Regime::Sparse => scaling_exponent(k, a),
        },
        n_swap,
        t,
        t_continuous,
        t_approx,
        encoding_rate: f,
        total_qubits,
        per_node,
        per_node_continuous,
        per_node_closed_form,
        area_normalized: per_node / plan.area_l0(),
        warnings,
    })
}

/// Router-router encoding totals per end node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RouterRouterOverhead {
    /// `C' = 2 C [log10 a]^J`.
    pub c_prime: f64,
    /// `sum_{I<n} a^I I^J`.
    pub exact_sum: f64,
    /// `(sum a^I)(sum I^J)`.
    pub product_sum: f64,
    /// `C' * exact_sum`.
    pub per_node_exact: f64,
    /// `C'' N^(log_k a) (log_k N)^(J+1) / (J+1)` with `C'' = C'/(a-1)`.
    pub per_node_bound: f64,
}

pub fn router_router_overhead(k: u32, n: u32, a_k: f64, family: CodeFamily) -> Result<RouterRouterOverhead> {
    if k < 2 {
        return Err(Error::param("k", k, ">= 2"));
    }
    if n < 1 {
        return Err(Error::param("n", n, ">= 1"));
    }
    if !(a_k.is_finite() && a_k > 1.0) {
        return Err(Error::param("a_k", a_k, "> 1"));
    }
    let j = family.exponent() as i32;
    let c_prime = 2.0 * family.rate_coefficient() * a_k.log10().powi(j);
    let mut exact_sum = 0.0;
    let mut geo = 0.0;
    let mut pow_sum = 0.0;
    for i in 0..n {
        let ai = a_k.powi(i as i32);
        let ij = f64::from(i).powi(j);
        exact_sum += ai * ij;
        geo += ai;
        pow_sum += ij;
    }
    let big_n = f64::from(k).powi(n as i32);
    let per_node_bound =
        c_prime / (a_k - 1.0) * big_n.powf(scaling_exponent(k, a_k)) * f64::from(n).powi(j + 1) / f64::from(j + 1);
    Ok(RouterRouterOverhead {
        c_prime,
        exact_sum,
        product_sum: geo * pow_sum,
        per_node_exact: c_prime * exact_sum,
        per_node_bound,
    })
}

/// One row of the cost-versus-distance comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub t: &'static str,
    pub r: &'static str,
    pub error_normalized: bool,
    pub scaling: &'static str,
    /// The scaling expression evaluated at the requested distance.
    pub coefficient: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxTScaling {
    /// Real-valued nesting level needed at `t = t_max`.
    pub r: f64,
    /// `ln 19`.
    pub log_exponent: f64,
    /// `L (ln L)^(ln 19)`, up to a constant.
    pub qubit_scaling: f64,
    pub rows: Vec<ScalingRow>,
}

/// Nesting needed when `t` is capped, and the resulting distance scaling.
pub fn max_t_scaling(cfg: &EcConfig, t_max: u32, distance: f64) -> Result<MaxTScaling> {
    cfg.validate()?;
    if t_max < 1 {
        return Err(Error::param("t_max", t_max, ">= 1"));
    }
    if !(distance.is_finite() && distance > 1.0) {
        return Err(Error::param("distance", distance, "> 1"));
    }
    let ln_l = distance.ln();
    let r = (ln_l / cfg.suppression()).ln() / (f64::from(t_max) + 1.0);
    let log_exponent = 19f64.ln();
    let levels = r.max(1.0);
    let rows = vec![
        ScalingRow { t: "variable", r: "1", error_normalized: true, scaling: "log L", coefficient: ln_l },
        ScalingRow {
            t: "variable",
            r: "variable",
            error_normalized: true,
            scaling: "19^r log L",
            coefficient: 19f64.powf(levels) * ln_l,
        },
        ScalingRow { t: "fixed", r: "variable", error_normalized: false, scaling: "[log L]^r", coefficient: ln_l.powf(levels) },
        ScalingRow {
            t: "t_max",
            r: "variable",
            error_normalized: true,
            scaling: "[log L]^2.94",
            coefficient: ln_l.powf(log_exponent),
        },
    ];
    Ok(MaxTScaling { r, log_exponent, qubit_scaling: distance * ln_l.powf(log_exponent), rows })
}

pub const SWEEP_HEADER: &str = "k,N,mode,family,r,regime,a_k,exponent,N_swap,t,t_continuous,t_approx,\
encoding_rate,total_qubits,per_node,per_node_continuous,per_node_closed_form,area_normalized";

/// Comma-separated rows under [`SWEEP_HEADER`].
pub fn write_sweep_csv(rows: &[OverheadReport]) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.k,
            r.end_nodes,
            r.mode.as_str(),
            r.family.as_str(),
            r.r,
            r.regime.as_str(),
            r.growth_rate,
            r.exponent,
            r.n_swap,
            r.t,
            r.t_continuous,
            r.t_approx,
            r.encoding_rate,
            r.total_qubits,
            r.per_node,
            r.per_node_continuous,
            r.per_node_closed_form,
            r.area_normalized
        );
    }
    out
}

/// Reports for every `n` in `heights`.
pub fn sweep(
    k: u32,
    heights: impl IntoIterator<Item = u32>,
    mode: DeploymentMode,
    cfg: &EcConfig,
    regime: Regime,
) -> Result<Vec<OverheadReport>> {
    heights
        .into_iter()
        .map(|n| {
            let tree = TreeTopology::new(k, n, 1)?;
            let plan = crate::deployment::plan(&tree, mode, 1.0)?;
            overhead(&tree, &plan, cfg, regime)
        })
        .collect()
}

/// Heights `n` with `k^n` inside `[lo, hi]`.
pub fn heights_in_range(k: u32, lo: u64, hi: u64) -> Vec<u32> {
    let mut out = Vec::new();
    let mut v: u64 = 1;
    for n in 1..64 {
        v = match v.checked_mul(u64::from(k)) {
            Some(v) => v,
            None => break,
        };
        if v > hi {
            break;
        }
        if v >= lo {
            out.push(n);
        }
    }
    out
}
