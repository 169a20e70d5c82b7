//! Space-time overhead accounting.
//!
//! Overhead is physical qubits times logical cycles per unencoded qubit:
//! `alpha = space * cycles / (k + t)` where `t` measurements act on `k`
//! logical qubits. The memory baseline is `n / k`.

use serde::{Deserialize, Serialize};

use crate::surgery::SurgeryDiagram;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Memory,
    LowRateSequential,
    LowRateParallel,
    HighRate,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Memory, Scheme::LowRateSequential, Scheme::LowRateParallel, Scheme::HighRate];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Memory => "memory",
            Scheme::LowRateSequential => "low_rate_sequential",
            Scheme::LowRateParallel => "low_rate_parallel",
            Scheme::HighRate => "high_rate",
        }
    }
}

/// Data code parameters; `total_size` counts qubits and both check types.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub total_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverheadReport {
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub t: usize,
    pub space_physical: usize,
    pub time_logical_cycles: usize,
    pub alpha: f64,
    pub baseline_alpha: f64,
    pub ratio_to_memory: f64,
}

/// Normalized space-time overhead.
pub fn alpha(space: usize, cycles: usize, k: usize, t: usize) -> f64 {
    (space * cycles) as f64 / (k + t) as f64
}

pub fn memory_alpha(n: usize, k: usize) -> f64 {
    n as f64 / k as f64
}

fn report(scheme: Scheme, p: &CodeParams, t: usize, space: usize, cycles: usize) -> OverheadReport {
    let a = alpha(space, cycles, p.k, t);
    let base = memory_alpha(p.n, p.k);
    OverheadReport {
        scheme,
        n: p.n,
        k: p.k,
        d: p.d,
        t,
        space_physical: space,
        time_logical_cycles: cycles,
        alpha: a,
        baseline_alpha: base,
        ratio_to_memory: a / base,
    }
}

/// Overhead of running `diag` for `cycles` logical cycles to measure `t` logicals.
pub fn overhead(diag: &SurgeryDiagram, d: usize, t: usize, cycles: usize) -> OverheadReport {
    let data = &diag.data;
    let p = CodeParams { n: data.n(), k: data.k(), d, total_size: data.n() + data.hx.n_rows() + data.hz.n_rows() };
    let scheme = if diag.ancilla_size() == 0 && t == 0 { Scheme::Memory } else { Scheme::HighRate };
    report(scheme, &p, t, data.n() + diag.ancilla_size(), cycles)
}

/// Size of one low-rate ancilla patch measuring a weight-`w` logical:
/// a graph ancilla of `2w` elements thickened `max(1, ceil(log2 w))` times.
pub fn low_rate_patch_size(w: usize) -> usize {
    let layers = if w <= 2 { 1 } else { (usize::BITS - (w - 1).leading_zeros()) as usize };
    2 * w * layers.max(1)
}

/// Closed-form space and cycle counts for each scheme.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeModel {
    pub scheme: Scheme,
    /// High-rate ancilla size; `None` uses the bound `|A| <= |C|`.
    pub high_rate_ancilla: Option<usize>,
}

impl SchemeModel {
    pub fn ancilla_size(&self, p: &CodeParams, t: usize) -> usize {
        match self.scheme {
            Scheme::Memory => 0,
            Scheme::LowRateSequential => low_rate_patch_size(p.d),
            Scheme::LowRateParallel => t * low_rate_patch_size(p.d),
            Scheme::HighRate => self.high_rate_ancilla.unwrap_or(p.total_size),
        }
    }

    pub fn cycles(&self, t: usize) -> usize {
        match self.scheme {
            Scheme::LowRateSequential => t.max(1),
            _ => 1,
        }
    }

    pub fn evaluate(&self, p: &CodeParams, t: usize) -> OverheadReport {
        let t_eff = if self.scheme == Scheme::Memory { 0 } else { t };
        report(self.scheme, p, t_eff, p.n + self.ancilla_size(p, t), self.cycles(t))
    }
}

/// The four-row comparison: memory, sequential, parallel, high rate.
pub fn compare_schemes(p: &CodeParams, t: usize, high_rate_ancilla: Option<usize>) -> Vec<OverheadReport> {
    Scheme::ALL.iter().map(|&scheme| SchemeModel { scheme, high_rate_ancilla }.evaluate(p, t)).collect()
}

pub const CSV_HEADER: &str = "scheme,n,k,d,t,space,cycles,alpha,ratio";

pub fn to_csv(rows: &[OverheadReport]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{:.6}\n",
            r.scheme.name(),
            r.n,
            r.k,
            r.d,
            r.t,
            r.space_physical,
            r.time_logical_cycles,
            r.alpha,
            r.ratio_to_memory
        ));
    }
    out
}
