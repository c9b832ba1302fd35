//! Flight envelope definition and space-filling samplers over it.
//!
//! The envelope is a box over altitude, ISA temperature deviation and
//! shaft-speed demand, plus an altitude-dependent Mach band given as a
//! piecewise-linear table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmc;

/// Closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn span(&self) -> f64 {
        self.hi - self.lo
    }

    /// Affine map from the unit interval.
    pub fn lerp(&self, u: f64) -> f64 {
        self.lo + u * (self.hi - self.lo)
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Self { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// One row of the altitude → Mach band table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct MachRow {
    pub altitude_ft: f64,
    pub mach_lo: f64,
    pub mach_hi: f64,
}

impl From<[f64; 3]> for MachRow {
    fn from([altitude_ft, mach_lo, mach_hi]: [f64; 3]) -> Self {
        Self {
            altitude_ft,
            mach_lo,
            mach_hi,
        }
    }
}

impl From<MachRow> for [f64; 3] {
    fn from(r: MachRow) -> Self {
        [r.altitude_ft, r.mach_lo, r.mach_hi]
    }
}

/// Input names usable as cut dimensions and CSV column keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputDim {
    Alt,
    Dts,
    Mach,
    Nl,
}

impl InputDim {
    pub const ALL: [InputDim; 4] = [InputDim::Alt, InputDim::Dts, InputDim::Mach, InputDim::Nl];

    pub fn name(self) -> &'static str {
        match self {
            InputDim::Alt => "alt",
            InputDim::Dts => "dts",
            InputDim::Mach => "mach",
            InputDim::Nl => "nl",
        }
    }
}

impl std::str::FromStr for InputDim {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        InputDim::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown input dimension `{s}`")))
    }
}

/// One operating condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightPoint {
    /// Pressure altitude, ft.
    pub alt: f64,
    /// Deviation from ISA static temperature, °R (equivalently °F).
    pub dts: f64,
    pub mach: f64,
    /// Low-spool shaft speed demand, RPM.
    pub nl: f64,
}

impl FlightPoint {
    pub const fn new(alt: f64, dts: f64, mach: f64, nl: f64) -> Self {
        Self { alt, dts, mach, nl }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.alt, self.dts, self.mach, self.nl]
    }

    pub fn from_array([alt, dts, mach, nl]: [f64; 4]) -> Self {
        Self { alt, dts, mach, nl }
    }

    pub fn get(&self, dim: InputDim) -> f64 {
        match dim {
            InputDim::Alt => self.alt,
            InputDim::Dts => self.dts,
            InputDim::Mach => self.mach,
            InputDim::Nl => self.nl,
        }
    }
}

/// Admissible input region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    #[serde(rename = "alt")]
    pub alt_bounds: Interval,
    #[serde(rename = "dts")]
    pub dts_bounds: Interval,
    #[serde(rename = "nl")]
    pub nl_bounds: Interval,
    pub mach_table: Vec<MachRow>,
}

impl Default for Envelope {
    fn default() -> Self {
        Self {
            alt_bounds: Interval::new(-2000.0, 10000.0),
            dts_bounds: Interval::new(-35.0, 35.0),
            nl_bounds: Interval::new(2000.0, 5000.0),
            mach_table: vec![
                [-2000.0, 0.0, 0.5].into(),
                [10000.0, 0.0, 0.58].into(),
                [20000.0, 0.4, 0.68].into(),
                [30000.0, 0.4, 0.9].into(),
                [40000.0, 0.4, 0.9].into(),
            ],
        }
    }
}

impl Envelope {
    /// Checks interval ordering, table ordering, and that the Mach table
    /// covers the altitude interval.
    pub fn validate(&self) -> Result<()> {
        for (name, i) in [
            ("alt", self.alt_bounds),
            ("dts", self.dts_bounds),
            ("nl", self.nl_bounds),
        ] {
            if !(i.lo <= i.hi) {
                return Err(Error::Contract(format!(
                    "{name} bounds [{}, {}] are not ordered",
                    i.lo, i.hi
                )));
            }
        }
        let table = &self.mach_table;
        if table.is_empty() {
            return Err(Error::Contract("mach_table is empty".into()));
        }
        if let Some(r) = table.iter().find(|r| !(r.mach_lo <= r.mach_hi)) {
            return Err(Error::Contract(format!(
                "mach_table row at {} ft has mach_lo > mach_hi",
                r.altitude_ft
            )));
        }
        if table
            .windows(2)
            .any(|w| !(w[0].altitude_ft < w[1].altitude_ft))
        {
            return Err(Error::Contract(
                "mach_table altitudes must be strictly increasing".into(),
            ));
        }
        let first = table[0].altitude_ft;
        let last = table[table.len() - 1].altitude_ft;
        if self.alt_bounds.lo < first || self.alt_bounds.hi > last {
            return Err(Error::Contract(format!(
                "mach_table spans [{first}, {last}] ft but altitude bounds are [{}, {}]",
                self.alt_bounds.lo, self.alt_bounds.hi
            )));
        }
        Ok(())
    }

    /// Mach band at `alt`: exact at table rows, linear in between.
    pub fn mach_bounds(&self, alt: f64) -> Result<(f64, f64)> {
        let table = &self.mach_table;
        let (first, last) = match (table.first(), table.last()) {
            (Some(f), Some(l)) => (f, l),
            _ => return Err(Error::Contract("mach_table is empty".into())),
        };
        if !(first.altitude_ft <= alt && alt <= last.altitude_ft) {
            return Err(Error::OutOfEnvelope {
                quantity: "alt",
                value: alt,
                lo: first.altitude_ft,
                hi: last.altitude_ft,
            });
        }
        if let Some(row) = table.iter().find(|r| r.altitude_ft == alt) {
            return Ok((row.mach_lo, row.mach_hi));
        }
        let upper = table.partition_point(|r| r.altitude_ft < alt);
        let (a, b) = (&table[upper - 1], &table[upper]);
        let t = (alt - a.altitude_ft) / (b.altitude_ft - a.altitude_ft);
        Ok((
            a.mach_lo + t * (b.mach_lo - a.mach_lo),
            a.mach_hi + t * (b.mach_hi - a.mach_hi),
        ))
    }

    /// Overall Mach interval reachable within the altitude bounds.
    pub fn mach_span(&self) -> Result<Interval> {
        let (mut lo, mut hi) = self.mach_bounds(self.alt_bounds.lo)?;
        let (l2, h2) = self.mach_bounds(self.alt_bounds.hi)?;
        lo = lo.min(l2);
        hi = hi.max(h2);
        for r in &self.mach_table {
            if self.alt_bounds.contains(r.altitude_ft) {
                lo = lo.min(r.mach_lo);
                hi = hi.max(r.mach_hi);
            }
        }
        Ok(Interval::new(lo, hi))
    }

    /// Bounds of one input dimension over the whole envelope.
    pub fn dim_bounds(&self, dim: InputDim) -> Result<Interval> {
        Ok(match dim {
            InputDim::Alt => self.alt_bounds,
            InputDim::Dts => self.dts_bounds,
            InputDim::Nl => self.nl_bounds,
            InputDim::Mach => self.mach_span()?,
        })
    }

    /// Verifies every envelope invariant for `p`.
    pub fn check(&self, p: &FlightPoint) -> Result<()> {
        let within = |quantity, value: f64, i: Interval| {
            if i.contains(value) {
                Ok(())
            } else {
                Err(Error::OutOfEnvelope {
                    quantity,
                    value,
                    lo: i.lo,
                    hi: i.hi,
                })
            }
        };
        within("alt", p.alt, self.alt_bounds)?;
        within("dts", p.dts, self.dts_bounds)?;
        within("nl", p.nl, self.nl_bounds)?;
        let (lo, hi) = self.mach_bounds(p.alt)?;
        within("mach", p.mach, Interval::new(lo, hi))
    }

    /// Maps a unit-cube coordinate `(alt, dts, mach, nl)` into the envelope.
    /// The Mach coordinate is rescaled into the band at the mapped altitude.
    pub fn map_unit(&self, u: [f64; 4]) -> Result<FlightPoint> {
        let alt = self.alt_bounds.lerp(u[0]);
        let (lo, hi) = self.mach_bounds(alt)?;
        Ok(FlightPoint {
            alt,
            dts: self.dts_bounds.lerp(u[1]),
            mach: Interval::new(lo, hi).lerp(u[2]),
            nl: self.nl_bounds.lerp(u[3]),
        })
    }

    /// Latin hypercube sample of `n` flight points.
    pub fn sample_lhs(&self, n: usize, seed: u64) -> Result<Vec<FlightPoint>> {
        self.validate()?;
        qmc::latin_hypercube::<4>(n, seed)?
            .into_iter()
            .map(|u| self.map_unit(u))
            .collect()
    }
}
