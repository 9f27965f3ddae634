//! Deterministic execution strategies in block form (`psi_l` sold at
//! `l / n`) and rate form (piecewise-constant `zeta` on `(r_i, r_{i+1}]`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `sum psi <= phi0` and on the sell-off equality.
pub const ADMISSIBILITY_TOL: f64 = 1e-12;

/// Blocks `psi_0 .. psi_{k-1}` sold at times `0, 1/n, .., (k-1)/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSchedule {
    n: u32,
    phi0: f64,
    blocks: Vec<f64>,
}

impl DiscreteSchedule {
    pub fn new(n: u32, phi0: f64, blocks: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Schedule("n must be >= 1".into()));
        }
        if !(phi0 >= 0.0 && phi0.is_finite()) {
            return Err(Error::Schedule(format!("phi0 = {phi0} must be >= 0")));
        }
        if let Some((l, &b)) = blocks
            .iter()
            .enumerate()
            .find(|(_, b)| !(**b >= 0.0 && b.is_finite()))
        {
            return Err(Error::Schedule(format!(
                "block {l} = {b} is negative or not finite"
            )));
        }
        let total: f64 = blocks.iter().sum();
        if total > phi0 + ADMISSIBILITY_TOL * phi0.max(1.0) {
            return Err(Error::Schedule(format!(
                "blocks sum to {total} which exceeds the inventory {phi0}"
            )));
        }
        Ok(Self { n, phi0, blocks })
    }

    /// `k` equal blocks of `phi0 / k`.
    pub fn uniform(n: u32, phi0: f64, k: usize) -> Result<Self> {
        let b = if k == 0 { 0.0 } else { phi0 / k as f64 };
        Self::new(n, phi0, vec![b; k])
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn blocks(&self) -> &[f64] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.blocks.iter().sum()
    }

    /// Inventory left after the last block.
    pub fn remaining(&self) -> f64 {
        (self.phi0 - self.total()).max(0.0)
    }

    pub fn is_sell_off(&self) -> bool {
        (self.phi0 - self.total()).abs() <= ADMISSIBILITY_TOL * self.phi0.max(1.0)
    }

    /// Inventory before each block plus the terminal inventory (`k + 1` values).
    pub fn inventory_path(&self) -> Vec<f64> {
        let mut phi = self.phi0;
        let mut out = Vec::with_capacity(self.blocks.len() + 1);
        out.push(phi);
        for b in &self.blocks {
            phi = (phi - b).max(0.0);
            out.push(phi);
        }
        out
    }

    /// CSV with columns `index,psi`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "psi"])?;
        for (l, b) in self.blocks.iter().enumerate() {
            w.write_record([l.to_string(), b.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `index,psi` rows; indices must be `0, 1, 2, ..` in order.
    pub fn read_csv<R: Read>(reader: R, n: u32, phi0: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            index: usize,
            psi: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut blocks = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.index != blocks.len() {
                return Err(Error::Schedule(format!(
                    "expected index {} but found {}",
                    blocks.len(),
                    row.index
                )));
            }
            blocks.push(row.psi);
        }
        Self::new(n, phi0, blocks)
    }
}

/// Piecewise-constant selling rate: `rates[i]` applies on
/// `(breakpoints[i], breakpoints[i + 1]]` (left-continuous). Simulators use
/// `rates[i]` for every time step `(r, r + dr]` inside that piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSchedule {
    phi0: f64,
    breakpoints: Vec<f64>,
    rates: Vec<f64>,
}

impl RateSchedule {
    pub fn new(phi0: f64, breakpoints: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if !(phi0 >= 0.0 && phi0.is_finite()) {
            return Err(Error::Schedule(format!("phi0 = {phi0} must be >= 0")));
        }
        if breakpoints.is_empty() {
            return Err(Error::Schedule(
                "at least one breakpoint is required".into(),
            ));
        }
        if breakpoints.len() != rates.len() + 1 {
            return Err(Error::Schedule(format!(
                "{} breakpoints for {} rates",
                breakpoints.len(),
                rates.len()
            )));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::Schedule("schedules start at time 0".into()));
        }
        if breakpoints
            .windows(2)
            .any(|w| !(w[1] > w[0]) || !w[1].is_finite())
        {
            return Err(Error::Schedule(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if rates.iter().any(|z| !(*z >= 0.0 && z.is_finite())) {
            return Err(Error::Schedule("rates must be finite and >= 0".into()));
        }
        let s = Self {
            phi0,
            breakpoints,
            rates,
        };
        let total = s.integral();
        if total > phi0 + ADMISSIBILITY_TOL * phi0.max(1.0) {
            return Err(Error::Schedule(format!(
                "rate integral {total} exceeds the inventory {phi0}"
            )));
        }
        Ok(s)
    }

    /// No trading; horizon `t`.
    pub fn zero(phi0: f64, t: f64) -> Result<Self> {
        if t > 0.0 {
            Self::new(phi0, vec![0.0, t], vec![0.0])
        } else {
            Self::new(phi0, vec![0.0], vec![])
        }
    }

    /// Constant rate `zeta` on `(0, t]`.
    pub fn constant(phi0: f64, zeta: f64, t: f64) -> Result<Self> {
        Self::new(phi0, vec![0.0, t], vec![zeta])
    }

    pub fn phi0(&self) -> f64 {
        self.phi0
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn horizon(&self) -> f64 {
        *self.breakpoints.last().expect("non-empty breakpoints")
    }

    /// `(r_start, r_end, zeta)` per piece.
    pub fn pieces(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.rates)
            .map(|(w, &z)| (w[0], w[1], z))
    }

    pub fn integral(&self) -> f64 {
        self.pieces().map(|(a, b, z)| z * (b - a)).sum()
    }

    /// Sup of the rate, finite by construction.
    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    /// Rate at time `r` under the left-continuous convention; `r = 0` takes
    /// the first piece and times past the horizon are 0.
    pub fn rate_at(&self, r: f64) -> f64 {
        if self.rates.is_empty() || r > self.horizon() {
            return 0.0;
        }
        // first breakpoint index with breakpoints[i] >= r
        let i = self.breakpoints.partition_point(|&b| b < r);
        self.rates[i.saturating_sub(1).min(self.rates.len() - 1)]
    }

    /// `int_a^b zeta_r dr`.
    pub fn integral_between(&self, a: f64, b: f64) -> f64 {
        self.pieces()
            .map(|(lo, hi, z)| {
                let lo = lo.max(a);
                let hi = hi.min(b);
                if hi > lo {
                    z * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Inventory `phi0 - int_0^r zeta` at time `r`.
    pub fn inventory_at(&self, r: f64) -> f64 {
        (self.phi0 - self.integral_between(0.0, r)).max(0.0)
    }

    /// CSV with columns `r_start,r_end,zeta`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["r_start", "r_end", "zeta"])?;
        for (a, b, z) in self.pieces() {
            w.write_record([a.to_string(), b.to_string(), z.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads contiguous `r_start,r_end,zeta` rows starting at 0.
    pub fn read_csv<R: Read>(reader: R, phi0: f64) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            r_start: f64,
            r_end: f64,
            zeta: f64,
        }
        let mut rdr = csv::Reader::from_reader(reader);
        let mut breakpoints = vec![0.0];
        let mut rates = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            let last = *breakpoints.last().unwrap();
            if (row.r_start - last).abs() > 1e-12 {
                return Err(Error::Schedule(format!(
                    "piece starts at {} but the previous one ended at {last}",
                    row.r_start
                )));
            }
            breakpoints.push(row.r_end);
            rates.push(row.zeta);
        }
        Self::new(phi0, breakpoints, rates)
    }
}

/// Rate form of a block schedule: rate `n psi_l` on `(l/n, (l+1)/n]`.
pub fn to_rate(d: &DiscreteSchedule) -> RateSchedule {
    let n = f64::from(d.n());
    let breakpoints: Vec<f64> = (0..=d.len()).map(|l| l as f64 / n).collect();
    let rates: Vec<f64> = d.blocks().iter().map(|b| b * n).collect();
    RateSchedule {
        phi0: d.phi0(),
        breakpoints,
        rates,
    }
}

/// Sells `phi` at rate `phi / delta` on `(0, delta]`, nothing on `(delta, t]`.
pub fn nearly_block(phi: f64, delta: f64, t: f64) -> Result<RateSchedule> {
    if !(delta > 0.0) {
        return Err(Error::domain("delta", delta, "duration must be > 0"));
    }
    if delta > t {
        return Err(Error::domain(
            "delta",
            delta,
            "duration must not exceed the horizon",
        ));
    }
    if !(phi >= 0.0) {
        return Err(Error::domain("phi", phi, "amount must be >= 0"));
    }
    if phi == 0.0 {
        return RateSchedule::zero(0.0, t);
    }
    if delta == t {
        RateSchedule::new(phi, vec![0.0, t], vec![phi / delta])
    } else {
        RateSchedule::new(phi, vec![0.0, delta, t], vec![phi / delta, 0.0])
    }
}

/// Completes a schedule to a sell-off schedule by adding the remaining
/// inventory to the last block `psi_{k-1}`.
pub fn append_terminal_block(d: &DiscreteSchedule) -> Result<DiscreteSchedule> {
    if d.is_sell_off() {
        return Ok(d.clone());
    }
    if d.is_empty() {
        return Err(Error::Schedule(
            "cannot liquidate a positive inventory in zero periods".into(),
        ));
    }
    let mut blocks = d.blocks().to_vec();
    let rest = d.phi0() - d.total();
    *blocks.last_mut().unwrap() += rest;
    DiscreteSchedule::new(d.n(), d.phi0(), blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn admissibility_is_enforced() {
        assert!(DiscreteSchedule::new(10, 1.0, vec![0.5, 0.6]).is_err());
        assert!(DiscreteSchedule::new(10, 1.0, vec![0.5, -0.1]).is_err());
        assert!(DiscreteSchedule::new(0, 1.0, vec![]).is_err());
        assert!(RateSchedule::new(1.0, vec![0.0, 1.0], vec![2.0]).is_err());
        assert!(RateSchedule::new(1.0, vec![0.0, 0.5, 0.5], vec![0.0, 0.0]).is_err());
        assert!(RateSchedule::new(1.0, vec![0.0, 1.0], vec![-1.0]).is_err());
        let ok = DiscreteSchedule::new(10, 1.0, vec![0.5, 0.5]).unwrap();
        assert!(ok.is_sell_off());
    }

    #[test]
    fn to_rate_examples() {
        let d = DiscreteSchedule::new(2, 1.0, vec![0.5, 0.5]).unwrap();
        let r = to_rate(&d);
        assert_eq!(r.breakpoints(), &[0.0, 0.5, 1.0]);
        assert_eq!(r.rates(), &[1.0, 1.0]);

        let empty = DiscreteSchedule::new(5, 1.0, vec![]).unwrap();
        let r = to_rate(&empty);
        assert_eq!(r.integral(), 0.0);
        assert!(r.rates().is_empty());

        let uni = DiscreteSchedule::uniform(500, 1.0, 500).unwrap();
        let r = to_rate(&uni);
        assert!(r.rates().iter().all(|z| (z - 1.0).abs() < 1e-12));
        assert!((r.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nearly_block_examples() {
        let r = nearly_block(1.0, 0.01, 1.0).unwrap();
        assert_relative_eq!(r.rate_at(0.005), 100.0, epsilon = 1e-12);
        assert_relative_eq!(r.rate_at(0.01), 100.0, epsilon = 1e-12);
        assert_eq!(r.rate_at(0.011), 0.0);
        assert_relative_eq!(r.integral(), 1.0, epsilon = 1e-12);
        let z = nearly_block(0.0, 0.1, 1.0).unwrap();
        assert_eq!(z.integral(), 0.0);
        assert!(nearly_block(1.0, 0.0, 1.0).is_err());
        assert!(nearly_block(1.0, -0.5, 1.0).is_err());
        assert!(nearly_block(1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn rate_at_is_left_continuous() {
        let r = RateSchedule::new(2.0, vec![0.0, 0.5, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(r.rate_at(0.0), 1.0);
        assert_eq!(r.rate_at(0.5), 1.0);
        assert_eq!(r.rate_at(0.5000001), 3.0);
        assert_eq!(r.rate_at(1.0), 3.0);
        assert_eq!(r.rate_at(1.5), 0.0);
        assert_relative_eq!(r.inventory_at(0.75), 2.0 - 0.5 - 0.75);
        assert_eq!(r.max_rate(), 3.0);
    }

    #[test]
    fn terminal_block_examples() {
        let d = DiscreteSchedule::new(10, 1.0, vec![0.3, 0.3]).unwrap();
        let so = append_terminal_block(&d).unwrap();
        assert_eq!(so.len(), 2);
        assert_relative_eq!(so.blocks()[1], 0.7, epsilon = 1e-15);
        assert!(so.is_sell_off());
        let again = append_terminal_block(&so).unwrap();
        assert_eq!(again, so);
        let empty = DiscreteSchedule::new(10, 1.0, vec![]).unwrap();
        assert!(append_terminal_block(&empty).is_err());
        let nothing = DiscreteSchedule::new(10, 0.0, vec![]).unwrap();
        assert_eq!(append_terminal_block(&nothing).unwrap(), nothing);
    }

    #[test]
    fn csv_round_trip() {
        let d = DiscreteSchedule::new(4, 2.0, vec![0.25, 0.0, 1.5]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf.clone())
            .unwrap()
            .starts_with("index,psi\n0,0.25\n"));
        assert_eq!(DiscreteSchedule::read_csv(&buf[..], 4, 2.0).unwrap(), d);

        let r = to_rate(&d);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let back = RateSchedule::read_csv(&buf[..], 2.0).unwrap();
        assert_eq!(back, r);

        let gap = "r_start,r_end,zeta\n0,0.5,1\n0.6,1,1\n";
        assert!(RateSchedule::read_csv(gap.as_bytes(), 2.0).is_err());
        let shuffled = "index,psi\n1,0.5\n";
        assert!(DiscreteSchedule::read_csv(shuffled.as_bytes(), 4, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn to_rate_recovers_blocks(
            n in 1u32..1000,
            raw in proptest::collection::vec(0.0f64..1.0, 0..60),
        ) {
            let phi0 = raw.iter().sum::<f64>() + 0.5;
            let d = DiscreteSchedule::new(n, phi0, raw.clone()).unwrap();
            let r = to_rate(&d);
            for (l, b) in raw.iter().enumerate() {
                let lo = l as f64 / f64::from(n);
                let hi = (l + 1) as f64 / f64::from(n);
                prop_assert!((r.integral_between(lo, hi) - b).abs() < 1e-12);
            }
            prop_assert!((r.integral() - d.total()).abs() < 1e-12);
        }

        #[test]
        fn admissibility_closed_under_completion(
            n in 1u32..1000,
            raw in proptest::collection::vec(0.0f64..1.0, 1..60),
            extra in 0.0f64..5.0,
            delta_frac in 0.001f64..1.0,
        ) {
            let phi0 = raw.iter().sum::<f64>() + extra;
            let d = DiscreteSchedule::new(n, phi0, raw).unwrap();
            let so = append_terminal_block(&d).unwrap();
            prop_assert!(so.is_sell_off());
            prop_assert_eq!(so.len(), d.len());
            let nb = nearly_block(phi0, delta_frac, 1.0).unwrap();
            prop_assert!((nb.integral() - phi0).abs() <= 1e-12 * phi0.max(1.0));
        }
    }
}
