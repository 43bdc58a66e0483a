//! Monte Carlo studies built on the solvers: moment estimates, the
//! maximal-inequality scaling study, energy balance, the `δ₁ → 1` sweep and
//! fractional time-Sobolev norms.
//!
//! Every study draws sample `i` from stream `i` of a [`crate::noise::NoiseDriver`]
//! and reduces in index order, so a report is a pure function of its
//! parameters and seed.

mod critical;
mod energy;
mod frac;
mod moments;
mod regularity;
mod stats;

pub use critical::{
    a_priori_2_check, critical_sweep, frac_decomposition, APriori2Table, CriticalParams,
    CriticalReport, FracParts,
};
pub use energy::{
    energy_balance, energy_bound_check, energy_rate, EnergyBound, EnergyRate, EnergyReport,
};
pub use frac::{frac_time_sobolev, FracNorm};
pub use moments::{
    admissible_alpha_range, assembled_constant, check_moment_hypothesis, maxineq_scaling,
    mc_sup_moment, mc_sup_moments, optimal_alpha, MaxIneqParams, MomentReport,
};
pub use regularity::{
    regularity_report, smoothed_convolution, RegularityParams, RegularityReport, RegularityRow,
};
pub use stats::{fit_line, BandCheck, Estimate, LineFit, Z99, Z99_ONE_SIDED};

/// One line of a tabular report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub point: String,
    pub statistic: String,
    pub value: f64,
    pub se: Option<f64>,
}

impl ReportRow {
    pub fn new(experiment: &str, point: impl Into<String>, statistic: &str, value: f64) -> Self {
        ReportRow {
            experiment: experiment.to_string(),
            point: point.into(),
            statistic: statistic.to_string(),
            value,
            se: None,
        }
    }

    pub fn estimate(
        experiment: &str,
        point: impl Into<String>,
        statistic: &str,
        e: &Estimate,
    ) -> Self {
        ReportRow {
            se: Some(e.se),
            ..ReportRow::new(experiment, point, statistic, e.mean)
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl MomentReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let x = "maxineq";
        let mut out: Vec<ReportRow> = self
            .horizons
            .iter()
            .zip(&self.estimates)
            .map(|(t, e)| ReportRow::estimate(x, format!("T={t}"), "moment", e))
            .collect();
        out.push(ReportRow::new(x, "all", "exponent", self.exponent));
        out.push(ReportRow::new(
            x,
            "all",
            "envelope_constant",
            self.envelope_constant,
        ));
        out.push(ReportRow::new(
            x,
            "all",
            "anchored_constant",
            self.anchored_constant,
        ));
        out.push(ReportRow::new(x, "all", "dominated", flag(self.dominated)));
        out.push(ReportRow::new(
            x,
            "all",
            "anchored_dominates",
            flag(self.anchored_dominates),
        ));
        out.push(ReportRow::new(
            x,
            "all",
            "ratio_nonincreasing",
            flag(self.ratio_nonincreasing),
        ));
        if let Some(f) = &self.slope {
            out.push(ReportRow {
                se: Some(f.slope_se),
                ..ReportRow::new(x, "all", "loglog_slope", f.slope)
            });
        }
        out
    }
}

impl EnergyReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let x = "energy";
        let mut out = Vec::new();
        for (n, t) in self.times.iter().enumerate() {
            let p = format!("t={t}");
            out.push(ReportRow::estimate(x, p.clone(), "l2_sq", &self.l2_sq[n]));
            out.push(ReportRow::estimate(
                x,
                p.clone(),
                "h1_integral",
                &self.h1_integral[n],
            ));
            out.push(ReportRow::estimate(
                x,
                p.clone(),
                "ito_correction",
                &self.ito_correction[n],
            ));
            out.push(ReportRow::estimate(x, p, "residual", &self.residual[n]));
        }
        out
    }
}

impl CriticalReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let x = "critical";
        let mut out = vec![
            ReportRow::new(x, "all", "mu", self.mu),
            ReportRow::new(x, "all", "c_w12", self.c_w12),
            ReportRow::new(x, "all", "mu_threshold", self.mu_threshold),
            ReportRow::new(x, "all", "bound_applicable", flag(self.bound_applicable)),
        ];
        if let Some(b) = self.h1_bound {
            out.push(ReportRow::new(x, "all", "h1_bound", b));
        }
        for (i, d) in self.deltas.iter().enumerate() {
            let p = format!("delta={d}");
            out.push(ReportRow::estimate(
                x,
                p.clone(),
                "h1_integral",
                &self.h1_integral[i],
            ));
            out.push(ReportRow::estimate(
                x,
                p.clone(),
                "frac_norm",
                &self.frac_norm[i],
            ));
            let last = self.l2_series[i].last().expect("non-empty");
            out.push(ReportRow::estimate(x, p.clone(), "l2_sq_final", last));
            if let Some(dist) = self.coupled_distances.get(i) {
                out.push(ReportRow::estimate(x, p, "coupled_distance_next", dist));
            }
        }
        for (name, band) in [("h1", &self.h1_band), ("frac", &self.frac_band)] {
            out.push(ReportRow::new(x, name, "band_ratio", band.band_ratio));
            out.push(ReportRow::new(x, name, "trend_z", band.trend_z));
            out.push(ReportRow::new(
                x,
                name,
                "within_band",
                flag(band.within_band),
            ));
            out.push(ReportRow::new(
                x,
                name,
                "increasing_trend",
                flag(band.increasing_trend),
            ));
        }
        out
    }
}

impl RegularityReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let x = "regularity";
        let mut out = Vec::new();
        for row in &self.rows {
            for (k, e) in self.modes.iter().zip(&row.estimates) {
                out.push(ReportRow::estimate(
                    x,
                    format!("alpha={};K={k}", row.alpha),
                    "sup_norm",
                    e,
                ));
            }
            for (i, g) in row.growth.iter().enumerate() {
                let p = format!("alpha={};K={}", row.alpha, self.modes[i + 1]);
                out.push(ReportRow::new(x, p, "growth", *g));
            }
            out.push(ReportRow::new(
                x,
                format!("alpha={}", row.alpha),
                "flagged",
                flag(row.flagged),
            ));
        }
        out
    }
}
