use std::path::PathBuf;
use std::str::FromStr;

use clap::ValueEnum;
use otaccel::instances::GridMetric;
use otaccel::OtMethod;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sinkhorn,
    AamSinkhorn,
    ApdagdBaseline,
    Ibp,
    AamIbp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sinkhorn => "sinkhorn",
            Method::AamSinkhorn => "aam-sinkhorn",
            Method::ApdagdBaseline => "apdagd-baseline",
            Method::Ibp => "ibp",
            Method::AamIbp => "aam-ibp",
        }
    }

    pub fn ot(self) -> CliResult<OtMethod> {
        match self {
            Method::Sinkhorn => Ok(OtMethod::Sinkhorn),
            Method::AamSinkhorn => Ok(OtMethod::AcceleratedSinkhorn),
            Method::ApdagdBaseline => Ok(OtMethod::Apdagd),
            m => Err(CliError::Config(format!(
                "{} is a barycenter method",
                m.name()
            ))),
        }
    }

    /// `true` for the accelerated barycenter solver.
    pub fn barycenter_accelerated(self) -> CliResult<bool> {
        match self {
            Method::Ibp => Ok(false),
            Method::AamIbp => Ok(true),
            m => Err(CliError::Config(format!("{} is an OT method", m.name()))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    SqEuclidean,
    L1,
}

impl From<Metric> for GridMetric {
    fn from(m: Metric) -> Self {
        match m {
            Metric::SqEuclidean => GridMetric::SqEuclidean,
            Metric::L1 => GridMetric::L1,
        }
    }
}

/// `auto` derives the regularization from the target accuracy; a number is
/// used as is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSpec {
    Auto,
    Fixed(f64),
}

impl FromStr for GammaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(GammaSpec::Auto);
        }
        s.parse::<f64>()
            .map(GammaSpec::Fixed)
            .map_err(|_| format!("expected a number or \"auto\", got {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub method: Option<Method>,
    pub gamma: GammaSpec,
    pub eps: f64,
    pub max_iters: usize,
    pub l0: f64,
    pub seed: u64,
    pub smooth: Option<f64>,
    pub out: PathBuf,
    pub check_interval: usize,
    pub workers: usize,
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("--eps must be positive, got {}", self.eps));
        }
        if let GammaSpec::Fixed(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return bad(format!("--gamma must be positive, got {g}"));
            }
        }
        if self.max_iters == 0 {
            return bad("--max-iters must be at least 1".into());
        }
        if self.check_interval == 0 {
            return bad("--check-interval must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("--workers must be at least 1".into());
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return bad(format!("--l0 must be positive, got {}", self.l0));
        }
        if let Some(s) = self.smooth {
            if !(s > 0.0 && s < 8.0) {
                return bad(format!("--smooth must lie in (0, 8), got {s}"));
            }
        }
        Ok(())
    }

    pub fn method_or(&self, default: Method) -> Method {
        self.method.unwrap_or(default)
    }
}
