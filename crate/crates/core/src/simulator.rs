//! Analytic two-spool turbofan stand-in.
//!
//! Outputs follow corrected-speed scaling on ISA total conditions with
//! power-law characteristics. At sea-level static standard day and
//! `nl = 5000` every correction factor is one and the outputs are the
//! round reference values `(9000, 2500, 6000, 3000)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{Envelope, FlightPoint};
use crate::error::{Error, Result};

/// ISA sea-level static temperature, °R.
pub const T_SL: f64 = 518.67;
/// Troposphere temperature lapse, °R/ft.
pub const LAPSE: f64 = 0.003_566_2;
/// Pressure-ratio exponent for the troposphere.
pub const PRESSURE_EXPONENT: f64 = 5.2559;
/// Highest altitude the troposphere relations cover, ft.
pub const TROPOPAUSE_FT: f64 = 36_089.0;

const REFERENCE_NL: f64 = 5000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutputDim {
    ShhN,
    F049Tt,
    Fn,
    WfuelPph,
}

impl OutputDim {
    pub const ALL: [OutputDim; 4] = [
        OutputDim::ShhN,
        OutputDim::F049Tt,
        OutputDim::Fn,
        OutputDim::WfuelPph,
    ];

    /// Column name used in datasets and reports.
    pub fn name(self) -> &'static str {
        match self {
            OutputDim::ShhN => "ShH_N",
            OutputDim::F049Tt => "F049_Tt",
            OutputDim::Fn => "PerfInst_Fn",
            OutputDim::WfuelPph => "PerfInst_WfuelPPH",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::str::FromStr for OutputDim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OutputDim::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown output `{s}`")))
    }
}

/// Steady-state engine response at one flight point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineOutputs {
    /// High-pressure shaft mechanical speed, RPM.
    pub shh_n: f64,
    /// Turbine total temperature, °R.
    pub f049_tt: f64,
    /// Net thrust, lbf.
    pub fn_lbf: f64,
    /// Total fuel flow, lbm/hr.
    pub wfuel_pph: f64,
}

impl EngineOutputs {
    pub const fn new(shh_n: f64, f049_tt: f64, fn_lbf: f64, wfuel_pph: f64) -> Self {
        Self {
            shh_n,
            f049_tt,
            fn_lbf,
            wfuel_pph,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.shh_n, self.f049_tt, self.fn_lbf, self.wfuel_pph]
    }

    pub fn from_array([shh_n, f049_tt, fn_lbf, wfuel_pph]: [f64; 4]) -> Self {
        Self::new(shh_n, f049_tt, fn_lbf, wfuel_pph)
    }

    pub fn get(&self, dim: OutputDim) -> f64 {
        self.to_array()[dim.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereState {
    pub ts_std: f64,
    pub ts: f64,
    pub theta: f64,
    pub delta: f64,
    pub theta_t: f64,
    pub delta_t: f64,
}

/// ISA troposphere static state with ram total-condition ratios.
pub fn atmosphere(alt: f64, dts: f64, mach: f64) -> Result<AtmosphereState> {
    if alt > TROPOPAUSE_FT {
        return Err(Error::UnsupportedAltitude(alt));
    }
    let ts_std = T_SL - LAPSE * alt;
    let ts = ts_std + dts;
    let theta = ts / T_SL;
    let delta = (ts_std / T_SL).powf(PRESSURE_EXPONENT);
    let ram = 1.0 + 0.2 * mach * mach;
    Ok(AtmosphereState {
        ts_std,
        ts,
        theta,
        delta,
        theta_t: theta * ram,
        delta_t: delta * ram.powf(3.5),
    })
}

/// Specific fuel consumption, computed from fuel flow and thrust.
pub fn sfc(x: &EngineOutputs) -> Result<f64> {
    if !(x.fn_lbf > 0.0) {
        return Err(Error::Domain(format!(
            "SFC undefined for net thrust {}",
            x.fn_lbf
        )));
    }
    Ok(x.wfuel_pph / x.fn_lbf)
}

/// The simulator; refuses to evaluate outside its envelope.
#[derive(Debug, Clone, Default)]
pub struct TurbofanModel {
    envelope: Envelope,
}

impl TurbofanModel {
    pub fn new(envelope: Envelope) -> Result<Self> {
        envelope.validate()?;
        Ok(Self { envelope })
    }

    pub fn envelope(&self) -> &Envelope {
        &self.envelope
    }

    pub fn simulate(&self, p: &FlightPoint) -> Result<EngineOutputs> {
        self.envelope.check(p)?;
        evaluate(p)
    }

    /// Evaluates every point; output order matches input order. Runs on the
    /// current rayon pool.
    pub fn simulate_batch(&self, points: &[FlightPoint]) -> Result<Vec<EngineOutputs>> {
        let results: Vec<Result<EngineOutputs>> =
            points.par_iter().map(|p| self.simulate(p)).collect();
        results
            .into_iter()
            .enumerate()
            .map(|(index, r)| {
                r.map_err(|e| Error::BatchPoint {
                    index,
                    source: Box::new(e),
                })
            })
            .collect()
    }
}

/// The response surface itself, without the envelope check.
fn evaluate(p: &FlightPoint) -> Result<EngineOutputs> {
    let atm = atmosphere(p.alt, p.dts, p.mach)?;
    let root_theta_t = atm.theta_t.sqrt();
    let n = p.nl / root_theta_t / REFERENCE_NL;
    let m = p.mach;
    Ok(EngineOutputs {
        shh_n: 9000.0 * n.sqrt() * root_theta_t,
        f049_tt: atm.theta_t * (900.0 + 1600.0 * n * n),
        fn_lbf: atm.delta_t * 6000.0 * n.powf(2.3) * (1.0 - 0.45 * m + 0.12 * m * m),
        wfuel_pph: atm.delta_t * root_theta_t * 3000.0 * n.powf(2.9) * (1.0 + 0.3 * m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        ((a - b) / b).abs() < rel
    }

    #[test]
    fn sea_level_standard_day() {
        let a = atmosphere(0.0, 0.0, 0.0).unwrap();
        assert_eq!(a.ts_std, 518.67);
        assert_eq!((a.theta, a.delta, a.theta_t, a.delta_t), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn atmosphere_at_10k_ft() {
        // 518.67 - 35.662 = 483.008; (483.008/518.67)^5.2559 evaluated separately.
        let a = atmosphere(10000.0, 0.0, 0.0).unwrap();
        assert!((a.ts_std - 483.008).abs() < 1e-9);
        assert!((a.delta - 0.687_700_35).abs() < 1e-6, "{}", a.delta);
    }

    #[test]
    fn hot_day_changes_theta_only() {
        let a = atmosphere(0.0, 35.0, 0.0).unwrap();
        assert!((a.theta - 553.67 / 518.67).abs() < 1e-15);
        assert!((a.theta - 1.067_480).abs() < 1e-6);
        assert_eq!(a.delta, 1.0);
    }

    #[test]
    fn above_tropopause_is_unsupported() {
        assert!(matches!(
            atmosphere(40000.0, 0.0, 0.5),
            Err(Error::UnsupportedAltitude(_))
        ));
    }

    #[test]
    fn reference_point_is_round() {
        let m = TurbofanModel::default();
        let x = m.simulate(&FlightPoint::new(0.0, 0.0, 0.0, 5000.0)).unwrap();
        assert_eq!(x, EngineOutputs::new(9000.0, 2500.0, 6000.0, 3000.0));
        assert_eq!(sfc(&x).unwrap(), 0.5);
    }

    #[test]
    fn derived_part_power_point() {
        // Frozen from an independent evaluation of the response formulas.
        let m = TurbofanModel::default();
        let x = m.simulate(&FlightPoint::new(0.0, 0.0, 0.5, 4000.0)).unwrap();
        assert!(close(x.shh_n, 8148.6343, 1e-6), "{x:?}");
        assert!(close(x.f049_tt, 1969.0, 1e-6), "{x:?}");
        assert!(close(x.fn_lbf, 3242.2683, 1e-6), "{x:?}");
        assert!(close(x.wfuel_pph, 2045.5626, 1e-6), "{x:?}");
        assert!(close(sfc(&x).unwrap(), 0.630_904_78, 1e-6));
    }

    #[test]
    fn thrust_floor_is_positive() {
        let m = TurbofanModel::default();
        let x = m.simulate(&FlightPoint::new(10000.0, -35.0, 0.0, 2000.0)).unwrap();
        assert!(close(x.fn_lbf, 593.52, 1e-4), "{}", x.fn_lbf);
    }

    #[test]
    fn sfc_domain() {
        assert!(matches!(
            sfc(&EngineOutputs::new(1.0, 1.0, 0.0, 1.0)),
            Err(Error::Domain(_))
        ));
        assert_eq!(sfc(&EngineOutputs::new(1.0, 1.0, 6000.0, 3000.0)).unwrap(), 0.5);
    }

    #[test]
    fn refuses_extrapolation() {
        let m = TurbofanModel::default();
        assert!(m.simulate(&FlightPoint::new(0.0, 0.0, 0.7, 4000.0)).is_err());
        assert!(m.simulate(&FlightPoint::new(0.0, 0.0, 0.2, 6000.0)).is_err());
        let batch = [
            FlightPoint::new(0.0, 0.0, 0.2, 4000.0),
            FlightPoint::new(0.0, 50.0, 0.2, 4000.0),
            FlightPoint::new(0.0, 0.0, 0.9, 4000.0),
        ];
        match m.simulate_batch(&batch) {
            Err(Error::BatchPoint { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn batch_edge_cases() {
        let m = TurbofanModel::default();
        assert!(m.simulate_batch(&[]).unwrap().is_empty());
        let p = FlightPoint::new(0.0, 0.0, 0.0, 5000.0);
        let out = m.simulate_batch(&[p; 3]).unwrap();
        assert!(out.iter().all(|x| *x == out[0]));
    }

    #[test]
    fn output_names_round_trip() {
        for d in OutputDim::ALL {
            assert_eq!(d.name().parse::<OutputDim>().unwrap(), d);
        }
    }
}
