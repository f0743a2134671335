//! Test-bed generators: dense synthetic QPs with step-wise or random rows
//! (optionally with a budget row), and mean-variance portfolio instances
//! built from return series.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::problem::{LinearRow, QpInstance};

/// Separate random streams so each component depends only on the seed.
mod stream {
    pub const Q: u64 = 1;
    pub const COST: u64 = 2;
    pub const ROWS: u64 = 3;
    pub const AUGMENT: u64 = 4;
    pub const PANEL: u64 = 5;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `Q = U diag(3i/n) Uᵀ` with `U` the orthogonal factor of a random
/// Gaussian matrix.
pub fn generate_q(n: usize, seed: u64) -> Matrix {
    assert!(n >= 1);
    let mut rng = rng_for(seed, stream::Q);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let u = g.qr().q();
    // W = U √S, Q = W Wᵀ
    let mut w = u;
    for (j, mut col) in w.column_iter_mut().enumerate() {
        col *= (3.0 * (j as f64 + 1.0) / n as f64).sqrt();
    }
    let q = &w * w.transpose();
    let mut out = Matrix::from_nalgebra(&q);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Entries uniform in `[0.05, 0.4]`.
pub fn generate_linear_cost(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, stream::COST);
    let dist = Uniform::new_inclusive(0.05, 0.4).expect("valid range");
    (0..n).map(|_| dist.sample(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowBlock {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    /// Some step-wise window ran past `n` and was cut.
    pub truncated: bool,
}

/// Window width `s = ⌊2n/(m+1)⌋` of the step-wise rows.
pub fn stepwise_width(n: usize, m: usize) -> usize {
    2 * n / (m + 1)
}

/// Row `i` (1-based) has ones on the `s` positions starting at
/// `1 + ⌊s/2⌋(i−1)`; `bᵢ = fᵢ s/n` with `fᵢ` uniform in `[0.4, 1]`.
pub fn generate_stepwise_constraints(n: usize, m: usize, seed: u64) -> Result<RowBlock> {
    let s = stepwise_width(n, m);
    if m == 0 || s < 2 {
        return Err(Error::InvalidArgument(format!(
            "step-wise rows need m >= 1 and 2n/(m+1) >= 2 (n = {n}, m = {m})"
        )));
    }
    let mut rng = rng_for(seed, stream::ROWS);
    let dist = Uniform::new_inclusive(0.4, 1.0).expect("valid range");
    let half = s / 2;
    let mut block = RowBlock {
        a: Vec::with_capacity(m),
        b: Vec::with_capacity(m),
        truncated: false,
    };
    for i in 0..m {
        let start = half * i;
        let end = start + s;
        if end > n {
            block.truncated = true;
        }
        let mut row = vec![0.0; n];
        for v in row.iter_mut().take(end.min(n)).skip(start.min(n)) {
            *v = 1.0;
        }
        let f = dist.sample(&mut rng);
        block.a.push(row);
        block.b.push(f * s as f64 / n as f64);
    }
    Ok(block)
}

/// Right-hand side `0.75·min + 0.25·max` of a random row.
pub fn random_row_rhs(a: &[f64]) -> f64 {
    let mn = a.iter().copied().fold(f64::INFINITY, f64::min);
    let mx = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    0.75 * mn + 0.25 * mx
}

/// Entries uniform in `[0, 1]`.
pub fn generate_random_constraints(n: usize, m: usize, seed: u64) -> Result<RowBlock> {
    if m == 0 {
        return Err(Error::InvalidArgument("random rows need m >= 1".into()));
    }
    let mut rng = rng_for(seed, stream::ROWS);
    let mut block = RowBlock {
        a: Vec::with_capacity(m),
        b: Vec::with_capacity(m),
        truncated: false,
    };
    for _ in 0..m {
        let row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        block.b.push(random_row_rhs(&row));
        block.a.push(row);
    }
    Ok(block)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BudgetKind {
    None,
    /// `eᵀx = 1`.
    Budget,
    /// `slb ≤ eᵀx ≤ sub`.
    Relaxed { slb: f64, sub: f64 },
}

pub const DEFAULT_RELAXED: BudgetKind = BudgetKind::Relaxed { slb: 0.9, sub: 1.1 };

pub fn attach_budget(inst: &mut QpInstance, kind: BudgetKind) -> Result<()> {
    let n = inst.n();
    match kind {
        BudgetKind::None => Ok(()),
        BudgetKind::Budget => inst.push_eq(LinearRow::new(vec![1.0; n], 1.0)),
        BudgetKind::Relaxed { slb, sub } => {
            if !(slb <= sub) {
                return Err(Error::InvalidArgument(format!(
                    "relaxed budget needs slb <= sub, got {slb} > {sub}"
                )));
            }
            inst.push_ineq(LinearRow::new(vec![1.0; n], slb))?;
            inst.push_ineq(LinearRow::new(vec![-1.0; n], -sub))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum InstanceClass {
    S,
    Sb,
    Srb,
    R,
    Rb,
    Rrb,
    Portfolio,
}

impl InstanceClass {
    pub const SYNTHETIC: [InstanceClass; 6] = [
        InstanceClass::S,
        InstanceClass::Sb,
        InstanceClass::Srb,
        InstanceClass::R,
        InstanceClass::Rb,
        InstanceClass::Rrb,
    ];

    pub fn label(self) -> &'static str {
        match self {
            InstanceClass::S => "S",
            InstanceClass::Sb => "S-b",
            InstanceClass::Srb => "S-rb",
            InstanceClass::R => "R",
            InstanceClass::Rb => "R-b",
            InstanceClass::Rrb => "R-rb",
            InstanceClass::Portfolio => "portfolio",
        }
    }

    pub fn is_stepwise(self) -> bool {
        matches!(self, InstanceClass::S | InstanceClass::Sb | InstanceClass::Srb)
    }

    pub fn budget(self) -> BudgetKind {
        match self {
            InstanceClass::Sb | InstanceClass::Rb => BudgetKind::Budget,
            InstanceClass::Srb | InstanceClass::Rrb => DEFAULT_RELAXED,
            _ => BudgetKind::None,
        }
    }
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl From<InstanceClass> for String {
    fn from(c: InstanceClass) -> String {
        c.label().to_string()
    }
}

impl TryFrom<String> for InstanceClass {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for InstanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [InstanceClass::Portfolio]
            .into_iter()
            .chain(InstanceClass::SYNTHETIC)
            .find(|c| c.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown instance class '{s}'")))
    }
}

/// Sidecar record written next to generated instance files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub class: InstanceClass,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stepwise_width: Option<usize>,
    #[serde(default)]
    pub truncated: bool,
    pub budget: BudgetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub periods: Option<usize>,
}

impl InstanceMetadata {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub m: usize,
    pub class: InstanceClass,
    pub seed: u64,
}

/// Builds one synthetic instance: `Q` from [`generate_q`], `c` from
/// [`generate_linear_cost`], `m` step-wise or random `≥` rows, the class's
/// budget rows and bounds `0 ≤ x ≤ 1`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<(QpInstance, InstanceMetadata)> {
    let SyntheticConfig { n, m, class, seed } = *cfg;
    if class == InstanceClass::Portfolio {
        return Err(Error::InvalidArgument("portfolio instances need a return panel".into()));
    }
    if m == 0 || n < m {
        return Err(Error::InvalidArgument(format!("need 1 <= m <= n, got n = {n}, m = {m}")));
    }
    let block = if class.is_stepwise() {
        generate_stepwise_constraints(n, m, seed)?
    } else {
        generate_random_constraints(n, m, seed)?
    };
    let name = format!("{}_n{}_m{}_s{}", class.label(), n, m, seed);
    let mut inst = QpInstance::new(name, generate_q(n, seed), generate_linear_cost(n, seed))?;
    for (a, b) in block.a.into_iter().zip(block.b) {
        inst.push_ineq(LinearRow::new(a, b))?;
    }
    attach_budget(&mut inst, class.budget())?;
    inst.set_bounds(vec![0.0; n], vec![1.0; n])?;
    let meta = InstanceMetadata {
        class,
        n,
        m,
        seed,
        stepwise_width: class.is_stepwise().then(|| stepwise_width(n, m)),
        truncated: block.truncated,
        budget: class.budget(),
        mu: None,
        periods: None,
    };
    Ok((inst, meta))
}

/// Parses an `m` argument: a plain count or a fraction of `n` such as
/// `n/32`.
pub fn parse_m(spec: &str, n: usize) -> Result<usize> {
    let s = spec.trim();
    if let Some(rest) = s.strip_prefix("n/") {
        let d: usize = rest
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("bad m fraction '{spec}'")))?;
        if d == 0 {
            return Err(Error::InvalidArgument("m fraction divides by zero".into()));
        }
        Ok((n / d).max(1))
    } else {
        s.parse()
            .map_err(|_| Error::InvalidArgument(format!("bad m value '{spec}'")))
    }
}

/// Asset return series, one row of `values` per asset.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesPanel {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl TimeSeriesPanel {
    pub fn new(names: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::Dimension {
                expected: names.len(),
                got: values.len(),
            });
        }
        let t = values.first().map_or(0, Vec::len);
        for v in &values {
            if v.len() != t {
                return Err(Error::Dimension {
                    expected: t,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("series contains non-finite values".into()));
            }
        }
        if t < 2 {
            return Err(Error::InvalidArgument("need at least two periods".into()));
        }
        Ok(TimeSeriesPanel { names, values })
    }

    pub fn n_assets(&self) -> usize {
        self.values.len()
    }

    pub fn periods(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// Reads a CSV with a header of asset names and one row per period.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let mut values = vec![Vec::new(); names.len()];
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != names.len() {
                return Err(Error::Parse {
                    line: line + 2,
                    msg: format!("expected {} fields, found {}", names.len(), rec.len()),
                });
            }
            for (col, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                    line: line + 2,
                    msg: format!("bad number '{field}'"),
                })?;
                values[col].push(v);
            }
        }
        Self::new(names, values)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        for t in 0..self.periods() {
            w.write_record(self.values.iter().map(|v| format!("{:e}", v[t])))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Simple returns `p_t / p_{t−1} − 1` from price series.
    pub fn prices_to_returns(&self) -> Result<Self> {
        let mut values = Vec::with_capacity(self.n_assets());
        for v in &self.values {
            if v.iter().any(|p| *p <= 0.0) {
                return Err(Error::InvalidArgument("prices must be positive".into()));
            }
            values.push(v.windows(2).map(|w| w[1] / w[0] - 1.0).collect());
        }
        Self::new(self.names.clone(), values)
    }

    pub fn means(&self) -> Vec<f64> {
        let t = self.periods() as f64;
        self.values.iter().map(|v| v.iter().sum::<f64>() / t).collect()
    }

    /// Sample covariance with the `T − 1` denominator.
    pub fn covariance(&self) -> Matrix {
        let n = self.n_assets();
        let t = self.periods();
        let mean = self.means();
        let centered: Vec<Vec<f64>> = self
            .values
            .iter()
            .zip(&mean)
            .map(|(v, m)| v.iter().map(|x| x - m).collect())
            .collect();
        let mut cov = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let s = crate::linalg::dot(&centered[i], &centered[j]) / (t as f64 - 1.0);
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
        }
        cov
    }
}

/// Factor-model return panel: each asset loads on one market factor plus
/// idiosyncratic noise, with mean returns in `[0.002, 0.015]`.
pub fn synthetic_panel(n_assets: usize, periods: usize, seed: u64) -> Result<TimeSeriesPanel> {
    let mut rng = rng_for(seed, stream::PANEL);
    let factor: Vec<f64> = (0..periods)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            0.02 * z
        })
        .collect();
    let mut values = Vec::with_capacity(n_assets);
    for _ in 0..n_assets {
        let mean = rng.random_range(0.002..0.015);
        let beta = rng.random_range(0.5..1.5);
        let vol = rng.random_range(0.01..0.04);
        let series: Vec<f64> = factor
            .iter()
            .map(|f| {
                let e: f64 = StandardNormal.sample(&mut rng);
                mean + beta * f + vol * e
            })
            .collect();
        values.push(series);
    }
    let names = (0..n_assets).map(|i| format!("A{i}")).collect();
    TimeSeriesPanel::new(names, values)
}

/// Return thresholds used for portfolio instances.
pub const MU_GRID: [f64; 5] = [0.006, 0.007, 0.008, 0.009, 0.01];

/// `min xᵀΣx` s.t. `rᵀx ≥ μ`, `eᵀx = 1`, `0 ≤ x ≤ 1`.
pub fn build_portfolio(panel: &TimeSeriesPanel, mu: f64, name: impl Into<String>) -> Result<QpInstance> {
    let n = panel.n_assets();
    let mut inst = QpInstance::new(name, panel.covariance(), vec![0.0; n])?;
    inst.push_ineq(LinearRow::new(panel.means(), mu))?;
    inst.push_eq(LinearRow::new(vec![1.0; n], 1.0))?;
    inst.set_bounds(vec![0.0; n], vec![1.0; n])?;
    Ok(inst)
}

/// Appends `k` noisy clones of every asset: clone values are
/// `value·(1 + u)` with `u` uniform in `[−eta, eta]`.
pub fn augment_series(panel: &TimeSeriesPanel, k: usize, eta: f64, seed: u64) -> Result<TimeSeriesPanel> {
    if !(1..=4).contains(&k) {
        return Err(Error::InvalidArgument(format!("augmentation factor must be 1..=4, got {k}")));
    }
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument("noise level must be nonnegative".into()));
    }
    let mut rng = rng_for(seed, stream::AUGMENT);
    let mut names = panel.names.clone();
    let mut values = panel.values.clone();
    for c in 1..=k {
        for (name, v) in panel.names.iter().zip(&panel.values) {
            names.push(format!("{name}~{c}"));
            values.push(
                v.iter()
                    .map(|x| {
                        let u = if eta > 0.0 { rng.random_range(-eta..=eta) } else { 0.0 };
                        x * (1.0 + u)
                    })
                    .collect(),
            );
        }
    }
    TimeSeriesPanel::new(names, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigenvalues(m: &Matrix) -> Vec<f64> {
        let e = nalgebra::SymmetricEigen::new(m.to_nalgebra());
        let mut v: Vec<f64> = e.eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn q_spectrum_small() {
        let q = generate_q(3, 11);
        let ev = eigenvalues(&q);
        for (i, e) in ev.iter().enumerate() {
            assert!((e - (i as f64 + 1.0)).abs() < 1e-8, "{ev:?}");
        }
        assert_eq!(q.max_asymmetry(), 0.0);
        let one = generate_q(1, 5);
        assert!((one[(0, 0)] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cost_range_and_determinism() {
        let c = generate_linear_cost(10_000, 3);
        assert!(c.iter().all(|v| (0.05..=0.4).contains(v)));
        let mean = c.iter().sum::<f64>() / c.len() as f64;
        assert!((0.2..=0.25).contains(&mean));
        assert_eq!(c, generate_linear_cost(10_000, 3));
    }

    #[test]
    fn stepwise_pattern() {
        let b = generate_stepwise_constraints(8, 3, 1).unwrap();
        assert_eq!(b.a[1], vec![0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
        let starts: Vec<usize> = b.a.iter().map(|r| r.iter().position(|v| *v == 1.0).unwrap() + 1).collect();
        assert_eq!(starts, vec![1, 3, 5]);
        for r in &b.a {
            assert_eq!(r.iter().sum::<f64>(), 4.0);
        }
        for bi in &b.b {
            assert!(*bi >= 0.4 * 0.5 && *bi <= 0.5);
        }
        assert!(!b.truncated);
        // consecutive windows overlap in s/2 positions
        let overlap = b.a[0].iter().zip(&b.a[1]).filter(|(x, y)| **x == 1.0 && **y == 1.0).count();
        assert_eq!(overlap, 2);
    }

    #[test]
    fn stepwise_rejects_narrow_windows() {
        assert!(generate_stepwise_constraints(4, 4, 0).is_err());
    }

    #[test]
    fn random_rhs_formula() {
        assert_eq!(random_row_rhs(&[0.0, 1.0, 0.5]), 0.25);
        assert_eq!(random_row_rhs(&[0.7; 4]), 0.7);
        let b = generate_random_constraints(50, 3, 2).unwrap();
        for (a, bi) in b.a.iter().zip(&b.b) {
            assert_eq!(*bi, random_row_rhs(a));
            let mean = a.iter().sum::<f64>() / 50.0;
            assert!(mean > *bi);
        }
    }

    #[test]
    fn budget_rows() {
        let mut inst = QpInstance::new("b", Matrix::identity(2), vec![0.0; 2]).unwrap();
        attach_budget(&mut inst, BudgetKind::Budget).unwrap();
        assert_eq!(inst.eq.len(), 1);
        assert_eq!(inst.eq[0].a, vec![1.0, 1.0]);
        attach_budget(&mut inst, DEFAULT_RELAXED).unwrap();
        assert_eq!(inst.ineq.len(), 2);
        assert!(attach_budget(&mut inst, BudgetKind::Relaxed { slb: 2.0, sub: 1.0 }).is_err());
    }

    #[test]
    fn classes_round_trip_labels() {
        for c in InstanceClass::SYNTHETIC {
            assert_eq!(c.label().parse::<InstanceClass>().unwrap(), c);
        }
        assert!("X".parse::<InstanceClass>().is_err());
        assert_eq!(parse_m("n/32", 2000).unwrap(), 62);
        assert_eq!(parse_m("22", 2000).unwrap(), 22);
    }

    #[test]
    fn synthetic_classes_validate() {
        for class in InstanceClass::SYNTHETIC {
            for m in [2, 22, 42] {
                let cfg = SyntheticConfig { n: 200, m, class, seed: 4 };
                let (inst, meta) = generate_synthetic(&cfg).unwrap();
                assert!(inst.validate().is_ok(), "{class} m={m}");
                assert_eq!(meta.m, m);
            }
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = SyntheticConfig {
            n: 30,
            m: 4,
            class: InstanceClass::Rrb,
            seed: 9,
        };
        let a = generate_synthetic(&cfg).unwrap().0.to_text();
        let b = generate_synthetic(&cfg).unwrap().0.to_text();
        assert_eq!(a, b);
    }

    #[test]
    fn anti_correlated_pair_is_balanced() {
        let z = [0.01, -0.02, 0.015, -0.005, 0.0, 0.02];
        let a: Vec<f64> = z.iter().map(|v| 0.008 + v).collect();
        let b: Vec<f64> = z.iter().map(|v| 0.008 - v).collect();
        let panel = TimeSeriesPanel::new(vec!["a".into(), "b".into()], vec![a, b]).unwrap();
        let inst = build_portfolio(&panel, 0.008, "pair").unwrap();
        let half = inst.eval_objective(&[0.5, 0.5]).unwrap();
        let single = inst.eval_objective(&[1.0, 0.0]).unwrap();
        assert!(half.abs() < 1e-18);
        assert!(single > 0.0);
        assert!(inst.validate().is_ok());
    }

    #[test]
    fn covariance_is_psd_and_clones_correlate() {
        let panel = synthetic_panel(20, 120, 1).unwrap();
        let cov = panel.covariance();
        let (lo, _) = crate::linalg::extreme_eigenvalues(&cov, 2000, 0);
        assert!(lo >= -1e-10);
        let aug = augment_series(&panel, 2, 0.05, 3).unwrap();
        assert_eq!(aug.n_assets(), 60);
        let c = aug.covariance();
        for a in 0..20 {
            let clone = 20 + a;
            let corr = c[(a, clone)] / (c[(a, a)] * c[(clone, clone)]).sqrt();
            assert!(corr >= 0.9, "corr {corr}");
        }
        let same = augment_series(&panel, 1, 0.0, 3).unwrap();
        assert_eq!(same.values[0], same.values[20]);
    }

    #[test]
    fn augmentation_factor_bounds() {
        let panel = synthetic_panel(3, 10, 1).unwrap();
        assert!(augment_series(&panel, 0, 0.05, 0).is_err());
        assert!(augment_series(&panel, 5, 0.05, 0).is_err());
        assert_eq!(augment_series(&panel, 4, 0.05, 0).unwrap().n_assets(), 15);
    }

    #[test]
    fn csv_panel_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let panel = synthetic_panel(4, 12, 2).unwrap();
        let p = dir.path().join("panel.csv");
        panel.write_csv(&p).unwrap();
        let back = TimeSeriesPanel::read_csv(&p).unwrap();
        assert_eq!(back, panel);
        let prices = TimeSeriesPanel::new(vec!["p".into()], vec![vec![100.0, 110.0, 99.0]]).unwrap();
        let r = prices.prices_to_returns().unwrap();
        assert!((r.values[0][0] - 0.1).abs() < 1e-15);
        assert!((r.values[0][1] + 0.1).abs() < 1e-15);
    }
}
