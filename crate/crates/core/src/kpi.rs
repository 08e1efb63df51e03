//! Community and dwelling KPIs, each normalized to a no-control baseline.
//!
//! All consumption-style KPIs count grid imports only: exports are free and
//! never offset cost or emissions.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Objective, Scenario};

#[derive(Debug, Error, PartialEq)]
pub enum KpiError {
    #[error("trace is empty")]
    EmptyTrace,
    #[error("trace shorter than one day ({len} steps < {steps_per_day})")]
    NoCompleteDay { len: usize, steps_per_day: usize },
    #[error("traces do not match: {0}")]
    TraceMismatch(String),
    #[error("malformed trace CSV (row {row}): {message}")]
    Parse { row: usize, message: String },
}

/// Time-indexed net-load record of one rollout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub dwelling_ids: Vec<String>,
    /// `net[t][i]`: signed net grid exchange of dwelling `i` at step `t`, kWh.
    pub net: Vec<Vec<f64>>,
    /// `gross[t][i]`: consumption before PV offsets (load plus charging), kWh.
    pub gross: Vec<Vec<f64>>,
    pub community: Vec<f64>,
    pub price: Vec<f64>,
    pub carbon: Vec<f64>,
    pub steps_per_day: usize,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.community.len()
    }

    pub fn is_empty(&self) -> bool {
        self.community.is_empty()
    }

    pub fn n_dwellings(&self) -> usize {
        self.dwelling_ids.len()
    }

    /// Checks the row-sum invariant `community[t] == Σ_i net[t][i]`.
    pub fn check_conservation(&self) -> Result<(), KpiError> {
        let tol = 1e-9 * self.n_dwellings().max(1) as f64;
        for (t, (row, e)) in self.net.iter().zip(&self.community).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - e).abs() > tol * (1.0 + e.abs()) {
                return Err(KpiError::TraceMismatch(format!(
                    "step {t}: community {e} != dwelling sum {sum}"
                )));
            }
        }
        Ok(())
    }

    /// Returns a copy with every net and gross value multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Trace {
        let mut out = self.clone();
        for row in out.net.iter_mut().chain(out.gross.iter_mut()) {
            row.iter_mut().for_each(|v| *v *= k);
        }
        out.community.iter_mut().for_each(|v| *v *= k);
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,dwelling_id,net_load_kwh,community_net_kwh,price,carbon,gross_kwh\n");
        for t in 0..self.len() {
            for (i, id) in self.dwelling_ids.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{t},{id},{},{},{},{},{}",
                    self.net[t][i], self.community[t], self.price[t], self.carbon[t], self.gross[t][i]
                );
            }
        }
        out
    }

    /// Parses the CSV written by [`Trace::to_csv`]. Rows must be grouped by
    /// step with dwellings in a consistent order.
    pub fn from_csv(text: &str, steps_per_day: usize) -> Result<Trace, KpiError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let perr = |row: usize, message: String| KpiError::Parse { row, message };
        let headers = reader.headers().map_err(|e| perr(1, e.to_string()))?;
        let expected = [
            "step",
            "dwelling_id",
            "net_load_kwh",
            "community_net_kwh",
            "price",
            "carbon",
            "gross_kwh",
        ];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(perr(1, format!("header must be `{}`", expected.join(","))));
        }
        if steps_per_day == 0 {
            return Err(perr(1, "steps_per_day must be positive".into()));
        }
        let mut trace = Trace {
            dwelling_ids: Vec::new(),
            net: Vec::new(),
            gross: Vec::new(),
            community: Vec::new(),
            price: Vec::new(),
            carbon: Vec::new(),
            steps_per_day,
        };
        let mut ids_fixed = false;
        let mut slot = 0;
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let rec = record.map_err(|e| perr(row, e.to_string()))?;
            if rec.len() != expected.len() {
                return Err(perr(row, format!("expected {} columns", expected.len())));
            }
            let num = |k: usize| -> Result<f64, KpiError> {
                let v: f64 = rec[k]
                    .parse()
                    .map_err(|_| perr(row, format!("`{}` is not a number", &rec[k])))?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(perr(row, format!("`{}` is not finite", &rec[k])))
                }
            };
            let step: usize = rec[0].parse().map_err(|_| perr(row, format!("bad step `{}`", &rec[0])))?;
            let id = &rec[1];
            if step == trace.len() {
                // First row of a new step.
                if step == 1 {
                    ids_fixed = true;
                }
                if ids_fixed && slot != trace.dwelling_ids.len() {
                    return Err(perr(row, format!("step {} has {slot} rows", step - 1)));
                }
                slot = 0;
                trace.net.push(Vec::new());
                trace.gross.push(Vec::new());
                trace.community.push(num(3)?);
                trace.price.push(num(4)?);
                trace.carbon.push(num(5)?);
            } else if step + 1 != trace.len() {
                return Err(perr(row, format!("step {step} out of order")));
            }
            if ids_fixed {
                if trace.dwelling_ids.get(slot).map(String::as_str) != Some(id) {
                    return Err(perr(row, format!("unexpected dwelling `{id}` at step {step}")));
                }
            } else {
                if trace.dwelling_ids.iter().any(|d| d == id) {
                    return Err(perr(row, format!("duplicate dwelling `{id}` at step {step}")));
                }
                trace.dwelling_ids.push(id.to_string());
            }
            let t = trace.len() - 1;
            if num(3)? != trace.community[t] || num(4)? != trace.price[t] || num(5)? != trace.carbon[t] {
                return Err(perr(row, format!("step-level columns disagree within step {step}")));
            }
            trace.net[t].push(num(2)?);
            trace.gross[t].push(num(6)?);
            slot += 1;
        }
        if trace.is_empty() {
            return Err(KpiError::EmptyTrace);
        }
        if slot != trace.dwelling_ids.len() {
            return Err(perr(0, format!("final step has {slot} rows")));
        }
        trace.check_conservation()?;
        Ok(trace)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Community,
    Dwelling(usize),
}

/// A raw KPI value with any guard flags raised while computing it.
#[derive(Debug, Clone, PartialEq)]
pub struct Measured {
    pub value: f64,
    pub flags: Vec<String>,
}

impl Measured {
    fn plain(value: f64) -> Self {
        Self { value, flags: Vec::new() }
    }
}

fn scoped_net(trace: &Trace, scope: Scope) -> Result<Vec<f64>, KpiError> {
    if trace.is_empty() {
        return Err(KpiError::EmptyTrace);
    }
    match scope {
        Scope::Community => Ok(trace.community.clone()),
        Scope::Dwelling(i) if i < trace.n_dwellings() => Ok(trace.net.iter().map(|r| r[i]).collect()),
        Scope::Dwelling(i) => Err(KpiError::TraceMismatch(format!("no dwelling {i}"))),
    }
}

fn weighted_imports(net: &[f64], weights: Option<&[f64]>) -> f64 {
    let mut total = 0.0;
    for (t, e) in net.iter().enumerate() {
        let w = weights.map_or(1.0, |w| w[t]);
        total += w * e.max(0.0);
    }
    total
}

/// D: total grid import, kWh.
pub fn kpi_consumption_d(trace: &Trace, scope: Scope) -> Result<Measured, KpiError> {
    Ok(Measured::plain(weighted_imports(&scoped_net(trace, scope)?, None)))
}

/// C: import cost.
pub fn kpi_price_c(trace: &Trace, scope: Scope) -> Result<Measured, KpiError> {
    Ok(Measured::plain(weighted_imports(&scoped_net(trace, scope)?, Some(&trace.price))))
}

/// G: import emissions, kgCO2.
pub fn kpi_carbon_g(trace: &Trace, scope: Scope) -> Result<Measured, KpiError> {
    Ok(Measured::plain(weighted_imports(&scoped_net(trace, scope)?, Some(&trace.carbon))))
}

/// Z: share of gross consumption drawn from the grid (lower means more
/// self-consumption).
pub fn kpi_znet_z(trace: &Trace, scope: Scope) -> Result<Measured, KpiError> {
    let imports = weighted_imports(&scoped_net(trace, scope)?, None);
    let mut gross = 0.0;
    for row in &trace.gross {
        match scope {
            Scope::Community => row.iter().for_each(|g| gross += g),
            Scope::Dwelling(i) => gross += row[i],
        }
    }
    if gross > 0.0 {
        Ok(Measured::plain(imports / gross))
    } else {
        Ok(Measured {
            value: 1.0,
            flags: vec!["zero_gross_consumption".into()],
        })
    }
}

fn complete_days(trace: &Trace) -> Result<(usize, Vec<String>), KpiError> {
    if trace.is_empty() {
        return Err(KpiError::EmptyTrace);
    }
    let spd = trace.steps_per_day;
    let days = trace.len() / spd;
    if days == 0 {
        return Err(KpiError::NoCompleteDay {
            len: trace.len(),
            steps_per_day: spd,
        });
    }
    let mut flags = Vec::new();
    let dropped = trace.len() - days * spd;
    if dropped > 0 {
        log::warn!("dropping trailing partial day ({dropped} steps) from daily KPIs");
        flags.push(format!("partial_day_dropped={dropped}"));
    }
    Ok((days, flags))
}

/// P: mean over complete days of the daily maximum community net load.
pub fn kpi_daily_peak_p(trace: &Trace) -> Result<Measured, KpiError> {
    let (days, flags) = complete_days(trace)?;
    let spd = trace.steps_per_day;
    let mut total = 0.0;
    for d in 0..days {
        let day = &trace.community[d * spd..(d + 1) * spd];
        total += day.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    Ok(Measured {
        value: total / days as f64,
        flags,
    })
}

/// R: total absolute step-to-step change of community net load.
pub fn kpi_ramping_r(trace: &Trace) -> Result<Measured, KpiError> {
    if trace.is_empty() {
        return Err(KpiError::EmptyTrace);
    }
    let mut total = 0.0;
    for w in trace.community.windows(2) {
        total += (w[1] - w[0]).abs();
    }
    Ok(Measured::plain(total))
}

/// 1-L: mean over complete days of `1 - mean/max`; days whose maximum is
/// not positive are skipped.
pub fn kpi_one_minus_load_factor(trace: &Trace) -> Result<Measured, KpiError> {
    let (days, mut flags) = complete_days(trace)?;
    let spd = trace.steps_per_day;
    let mut total = 0.0;
    let mut counted = 0usize;
    for d in 0..days {
        let day = &trace.community[d * spd..(d + 1) * spd];
        let max = day.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= 0.0 {
            continue;
        }
        let mean = day.iter().sum::<f64>() / spd as f64;
        total += 1.0 - mean / max;
        counted += 1;
    }
    if counted < days {
        flags.push(format!("days_skipped={}", days - counted));
    }
    let value = if counted == 0 {
        flags.push("no_positive_day".into());
        0.0
    } else {
        total / counted as f64
    };
    Ok(Measured { value, flags })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KpiId {
    D,
    C,
    G,
    Z,
    P,
    R,
    OneMinusL,
}

impl KpiId {
    pub const REC: [KpiId; 7] = [KpiId::D, KpiId::C, KpiId::G, KpiId::Z, KpiId::P, KpiId::R, KpiId::OneMinusL];
    pub const DWELLING: [KpiId; 3] = [KpiId::C, KpiId::G, KpiId::Z];

    pub fn code(self) -> &'static str {
        match self {
            KpiId::D => "D",
            KpiId::C => "C",
            KpiId::G => "G",
            KpiId::Z => "Z",
            KpiId::P => "P",
            KpiId::R => "R",
            KpiId::OneMinusL => "1-L",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            KpiId::D => "Electricity Consumption (D)",
            KpiId::C => "Electricity Price (C)",
            KpiId::G => "Carbon Emissions (G)",
            KpiId::Z => "Zero Net Energy (Z)",
            KpiId::P => "Average Daily Peak (P)",
            KpiId::R => "Ramping (R)",
            KpiId::OneMinusL => "1 - Load Factor (1-L)",
        }
    }

    pub fn compute(self, trace: &Trace, scope: Scope) -> Result<Measured, KpiError> {
        match self {
            KpiId::D => kpi_consumption_d(trace, scope),
            KpiId::C => kpi_price_c(trace, scope),
            KpiId::G => kpi_carbon_g(trace, scope),
            KpiId::Z => kpi_znet_z(trace, scope),
            KpiId::P => kpi_daily_peak_p(trace),
            KpiId::R => kpi_ramping_r(trace),
            KpiId::OneMinusL => kpi_one_minus_load_factor(trace),
        }
    }
}

impl fmt::Display for KpiId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiRow {
    pub kpi: KpiId,
    pub raw_controlled: f64,
    pub raw_baseline: f64,
    /// `None` when the baseline value is zero.
    pub ratio: Option<f64>,
    pub flags: Vec<String>,
}

impl KpiRow {
    fn new(kpi: KpiId, controlled: Measured, baseline: Measured) -> Self {
        let mut flags: Vec<String> = controlled.flags.iter().map(|f| format!("controlled:{f}")).collect();
        flags.extend(baseline.flags.iter().map(|f| format!("baseline:{f}")));
        let ratio = if baseline.value == 0.0 {
            flags.push("division_guard".into());
            None
        } else {
            Some(controlled.value / baseline.value)
        };
        Self {
            kpi,
            raw_controlled: controlled.value,
            raw_baseline: baseline.value,
            ratio,
            flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwellingKpis {
    pub id: String,
    pub objective: Objective,
    pub rows: Vec<KpiRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KpiReport {
    pub rec: Vec<KpiRow>,
    pub dwellings: Vec<DwellingKpis>,
}

impl KpiReport {
    pub fn rec_row(&self, kpi: KpiId) -> Option<&KpiRow> {
        self.rec.iter().find(|r| r.kpi == kpi)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,scope,kpi,raw_controlled,raw_baseline,ratio,flags\n");
        let mut row = |level: &str, scope: &str, r: &KpiRow| {
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{level},{scope},{},{},{},{ratio},{}",
                r.kpi.code(),
                r.raw_controlled,
                r.raw_baseline,
                r.flags.join(";")
            );
        };
        for r in &self.rec {
            row("rec", "community", r);
        }
        for d in &self.dwellings {
            for r in &d.rows {
                row("dwelling", &d.id, r);
            }
        }
        out
    }

    /// Aligned text tables: REC-level KPIs, then dwelling-level C/G/Z with
    /// each dwelling's objective in its column header.
    pub fn to_text(&self) -> String {
        let pct = |r: &KpiRow| match r.ratio {
            Some(v) => format!("{:+.2}%", (v - 1.0) * 100.0),
            None => "n/a".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "REC-level KPIs (normalized to no-control baseline)");
        let _ = writeln!(
            out,
            "{:<30} {:>14} {:>14} {:>10} {:>10}",
            "KPI", "controlled", "baseline", "ratio", "change"
        );
        for r in &self.rec {
            let ratio = r.ratio.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into());
            let _ = writeln!(
                out,
                "{:<30} {:>14.4} {:>14.4} {:>10} {:>10}",
                r.kpi.label(),
                r.raw_controlled,
                r.raw_baseline,
                ratio,
                pct(r)
            );
        }
        if self.dwellings.is_empty() {
            return out;
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "Dwelling-level KPIs (change vs baseline)");
        let _ = write!(out, "{:<30}", "KPI");
        for d in &self.dwellings {
            let _ = write!(out, " {:>12}", format!("{} ({})", d.id, d.objective.kpi_letter()));
        }
        let _ = writeln!(out);
        for (k, kpi) in KpiId::DWELLING.iter().enumerate() {
            let _ = write!(out, "{:<30}", kpi.label());
            for d in &self.dwellings {
                let _ = write!(out, " {:>12}", pct(&d.rows[k]));
            }
            let _ = writeln!(out);
        }
        out
    }
}

/// Computes every KPI on both traces and normalizes controlled by baseline.
pub fn build_report(controlled: &Trace, baseline: &Trace, scenario: &Scenario) -> Result<KpiReport, KpiError> {
    if controlled.len() != baseline.len() {
        return Err(KpiError::TraceMismatch(format!(
            "lengths differ: controlled {} vs baseline {}",
            controlled.len(),
            baseline.len()
        )));
    }
    if controlled.dwelling_ids != baseline.dwelling_ids {
        return Err(KpiError::TraceMismatch("dwelling sets differ".into()));
    }
    if controlled.steps_per_day != baseline.steps_per_day {
        return Err(KpiError::TraceMismatch("steps_per_day differs".into()));
    }
    let scenario_ids: Vec<&str> = scenario.dwellings.iter().map(|d| d.id.as_str()).collect();
    if controlled.dwelling_ids.iter().map(String::as_str).ne(scenario_ids.iter().copied()) {
        return Err(KpiError::TraceMismatch("trace dwellings do not match scenario".into()));
    }

    let rec = KpiId::REC
        .iter()
        .map(|&k| {
            Ok(KpiRow::new(
                k,
                k.compute(controlled, Scope::Community)?,
                k.compute(baseline, Scope::Community)?,
            ))
        })
        .collect::<Result<Vec<_>, KpiError>>()?;
    let dwellings = scenario
        .dwellings
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let rows = KpiId::DWELLING
                .iter()
                .map(|&k| {
                    Ok(KpiRow::new(
                        k,
                        k.compute(controlled, Scope::Dwelling(i))?,
                        k.compute(baseline, Scope::Dwelling(i))?,
                    ))
                })
                .collect::<Result<Vec<_>, KpiError>>()?;
            Ok(DwellingKpis {
                id: d.id.clone(),
                objective: d.objective,
                rows,
            })
        })
        .collect::<Result<Vec<_>, KpiError>>()?;
    Ok(KpiReport { rec, dwellings })
}
