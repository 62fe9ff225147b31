use imbench_util::table::{fmt_list, Table, TableError};

use crate::grid::GridSpec;

pub const LOG_FORMAT: &str = "imbench-measurement-log";
const LOG_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum LogError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("log column `{0}` has wrong length")]
    Ragged(String),
}

/// Recorded columns, in file order. The truth columns are optional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Col {
    T,
    Idx,
    J,
    K,
    IsdRef,
    IsqRef,
    /// Commanded (post-limit) voltage computed at this sample.
    UsdCmd,
    UsqCmd,
    Isd,
    Isq,
    PsiRHat,
    OmegaK,
    OmegaM,
    ThetaK,
    TauShaft,
    Sat,
    PsiSdTrue,
    PsiSqTrue,
    PsiRdTrue,
    PsiRqTrue,
    TauETrue,
}

impl Col {
    pub const REQUIRED: [Col; 16] = [
        Col::T,
        Col::Idx,
        Col::J,
        Col::K,
        Col::IsdRef,
        Col::IsqRef,
        Col::UsdCmd,
        Col::UsqCmd,
        Col::Isd,
        Col::Isq,
        Col::PsiRHat,
        Col::OmegaK,
        Col::OmegaM,
        Col::ThetaK,
        Col::TauShaft,
        Col::Sat,
    ];
    pub const TRUTH: [Col; 5] = [Col::PsiSdTrue, Col::PsiSqTrue, Col::PsiRdTrue, Col::PsiRqTrue, Col::TauETrue];

    pub fn name(self) -> &'static str {
        match self {
            Col::T => "t",
            Col::Idx => "idx",
            Col::J => "j",
            Col::K => "k",
            Col::IsdRef => "i_sd_ref",
            Col::IsqRef => "i_sq_ref",
            Col::UsdCmd => "u_sd",
            Col::UsqCmd => "u_sq",
            Col::Isd => "i_sd",
            Col::Isq => "i_sq",
            Col::PsiRHat => "psi_r_hat",
            Col::OmegaK => "omega_k",
            Col::OmegaM => "omega_m",
            Col::ThetaK => "theta_k",
            Col::TauShaft => "tau_shaft",
            Col::Sat => "sat",
            Col::PsiSdTrue => "psi_sd_true",
            Col::PsiSqTrue => "psi_sq_true",
            Col::PsiRdTrue => "psi_rd_true",
            Col::PsiRqTrue => "psi_rq_true",
            Col::TauETrue => "tau_e_true",
        }
    }
}

/// Run metadata stored ahead of the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHeader {
    pub speed: f64,
    pub f_s: f64,
    pub grid: GridSpec,
    pub seed: u64,
    pub torque_noise_std: f64,
    pub substeps: usize,
    /// False if the run aborted; rows then hold the partial record.
    pub valid: bool,
    pub note: String,
    /// Largest per-window relative energy-balance residual, if audited.
    pub audit_max_residual: Option<f64>,
    pub params: Vec<(String, String)>,
    pub controller: Vec<(String, String)>,
}

/// One speed's record: header plus column-major samples.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementLog {
    pub header: LogHeader,
    pub columns: Vec<Col>,
    pub data: Vec<Vec<f64>>,
}

impl MeasurementLog {
    pub fn new(header: LogHeader, truth: bool) -> Self {
        let mut columns = Col::REQUIRED.to_vec();
        if truth {
            columns.extend(Col::TRUTH);
        }
        let data = vec![Vec::new(); columns.len()];
        MeasurementLog { header, columns, data }
    }

    pub fn with_capacity(mut self, rows: usize) -> Self {
        for c in &mut self.data {
            c.reserve_exact(rows);
        }
        self
    }

    pub fn n_rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    pub fn has(&self, c: Col) -> bool {
        self.columns.contains(&c)
    }

    /// Panics if the column was not recorded; check [`MeasurementLog::has`]
    /// for truth columns.
    pub fn col(&self, c: Col) -> &[f64] {
        let i = self.columns.iter().position(|&x| x == c).unwrap_or_else(|| panic!("column {} not recorded", c.name()));
        &self.data[i]
    }

    pub fn col_mut(&mut self, c: Col) -> &mut Vec<f64> {
        let i = self.columns.iter().position(|&x| x == c).unwrap_or_else(|| panic!("column {} not recorded", c.name()));
        &mut self.data[i]
    }

    /// Append one row given in `columns` order.
    pub fn push_row(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        for (c, &v) in self.data.iter_mut().zip(row) {
            c.push(v);
        }
    }

    pub fn to_table(&self) -> Table {
        let h = &self.header;
        let g = &h.grid;
        let mut t = Table::new(LOG_FORMAT, LOG_VERSION);
        t.set_f64("speed", h.speed);
        t.set_f64("f_s", h.f_s);
        t.set("seed", h.seed);
        t.set_f64("torque_noise_std", h.torque_noise_std);
        t.set("substeps", h.substeps);
        t.set("valid", h.valid);
        t.set("note", &h.note);
        if let Some(r) = h.audit_max_residual {
            t.set_f64("audit_max_residual", r);
        }
        t.set_f64("grid.i_sd_min", g.i_sd_min);
        t.set_f64("grid.i_sd_max", g.i_sd_max);
        t.set_f64("grid.i_sq_max", g.i_sq_max);
        t.set("grid.m", g.m);
        t.set("grid.n", g.n);
        t.set_f64("grid.hold_time", g.hold_time);
        t.set("grid.speeds", fmt_list(&g.speeds));
        for (k, v) in &h.params {
            t.set(&format!("plant.{k}"), v);
        }
        for (k, v) in &h.controller {
            t.set(&format!("ctrl.{k}"), v);
        }
        for (c, v) in self.columns.iter().zip(&self.data) {
            t.push_column(c.name(), v.clone());
        }
        t
    }

    pub fn to_text(&self) -> String {
        self.to_table().to_text()
    }

    pub fn parse(text: &str) -> Result<Self, LogError> {
        let t = Table::parse(text)?;
        t.expect_format(LOG_FORMAT)?;
        let grid = GridSpec {
            i_sd_min: t.get_parsed("grid.i_sd_min")?,
            i_sd_max: t.get_parsed("grid.i_sd_max")?,
            i_sq_max: t.get_parsed("grid.i_sq_max")?,
            m: t.get_parsed("grid.m")?,
            n: t.get_parsed("grid.n")?,
            hold_time: t.get_parsed("grid.hold_time")?,
            speeds: t.get_list("grid.speeds")?,
        };
        let prefixed = |p: &str| -> Vec<(String, String)> {
            t.meta.iter().filter_map(|(k, v)| k.strip_prefix(p).map(|k| (k.to_string(), v.clone()))).collect()
        };
        let header = LogHeader {
            speed: t.get_parsed("speed")?,
            f_s: t.get_parsed("f_s")?,
            grid,
            seed: t.get_parsed("seed")?,
            torque_noise_std: t.get_parsed("torque_noise_std")?,
            substeps: t.get_parsed("substeps")?,
            valid: t.get_parsed("valid")?,
            note: t.get("note").unwrap_or("").to_string(),
            audit_max_residual: t.get("audit_max_residual").map(|_| t.get_parsed("audit_max_residual")).transpose()?,
            params: prefixed("plant."),
            controller: prefixed("ctrl."),
        };
        let truth = Col::TRUTH.iter().all(|c| t.has_column(c.name()));
        let mut log = MeasurementLog::new(header, truth);
        let n = t.n_rows();
        for (c, dst) in log.columns.iter().zip(log.data.iter_mut()) {
            let v = t.column(c.name())?;
            if v.len() != n {
                return Err(LogError::Ragged(c.name().into()));
            }
            *dst = v.to_vec();
        }
        Ok(log)
    }
}
