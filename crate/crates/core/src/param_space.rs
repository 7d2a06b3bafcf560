//! The eleven-gene AODV search space.
//!
//! Gene order is fixed and used everywhere a genome is written out:
//!
//! | idx | name                   | kind    | range         | RFC 3561 |
//! |-----|------------------------|---------|---------------|----------|
//! | 0   | `HELLO_INTERVAL`       | real    | [1.0, 20.0]   | 1.0 s    |
//! | 1   | `ACTIVE_ROUTE_TIMEOUT` | real    | [1.0, 20.0]   | 3.0 s    |
//! | 2   | `MY_ROUTE_TIMEOUT`     | real    | [1.0, 40.0]   | 6.0 s    |
//! | 3   | `NODE_TRAVERSAL_TIME`  | real    | [0.01, 15.0]  | 0.040 s  |
//! | 4   | `MAX_RREQ_TIMEOUT`     | real    | [1.0, 100.0]  | 10.0 s   |
//! | 5   | `NET_DIAMETER`         | integer | [3, 100]      | 35       |
//! | 6   | `ALLOWED_HELLO_LOSS`   | integer | [0, 20]       | 2        |
//! | 7   | `REQ_RETRIES`          | integer | [0, 20]       | 2        |
//! | 8   | `TTL_START`            | integer | [1, 40]       | 1        |
//! | 9   | `TTL_INCREMENT`        | integer | [1, 20]       | 2        |
//! | 10  | `TTL_THRESHOLD`        | integer | [1, 60]       | 7        |
//!
//! Integer genes live in continuous space while the optimizer works on them
//! and are rounded (half away from zero) by [`ParamSpace::repair`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::keyed::{Keyed, KeyedError};

pub const GENE_COUNT: usize = 11;

/// Gene indices in canonical order.
pub mod gene {
    pub const HELLO_INTERVAL: usize = 0;
    pub const ACTIVE_ROUTE_TIMEOUT: usize = 1;
    pub const MY_ROUTE_TIMEOUT: usize = 2;
    pub const NODE_TRAVERSAL_TIME: usize = 3;
    pub const MAX_RREQ_TIMEOUT: usize = 4;
    pub const NET_DIAMETER: usize = 5;
    pub const ALLOWED_HELLO_LOSS: usize = 6;
    pub const REQ_RETRIES: usize = 7;
    pub const TTL_START: usize = 8;
    pub const TTL_INCREMENT: usize = 9;
    pub const TTL_THRESHOLD: usize = 10;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneKind {
    Real,
    Integer,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeneSpec {
    pub name: &'static str,
    pub kind: GeneKind,
    pub lower: f64,
    pub upper: f64,
    pub rfc_default: f64,
}

impl GeneSpec {
    const fn new(
        name: &'static str,
        kind: GeneKind,
        lower: f64,
        upper: f64,
        rfc_default: f64,
    ) -> Self {
        Self {
            name,
            kind,
            lower,
            upper,
            rfc_default,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Round (integer genes) then clamp.
    pub fn repair(&self, v: f64) -> f64 {
        let v = match self.kind {
            GeneKind::Real => v,
            GeneKind::Integer => v.round(),
        };
        // `+ 0.0` folds a rounded -0.0 into +0.0 so hashes and text agree.
        v.clamp(self.lower, self.upper) + 0.0
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GenomeError {
    #[error("genome must have {GENE_COUNT} values, got {0}")]
    Arity(usize),
    #[error("gene {index} ({name}) is not a finite number")]
    NotFinite { index: usize, name: &'static str },
    #[error("unparsable genome value {value:?} at position {index}")]
    Parse { index: usize, value: String },
    #[error(transparent)]
    Keyed(#[from] KeyedError),
}

/// A candidate configuration, values in canonical gene order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Genome(pub [f64; GENE_COUNT]);

impl Genome {
    pub fn from_slice(values: &[f64]) -> Result<Self, GenomeError> {
        let arr: [f64; GENE_COUNT] = values
            .try_into()
            .map_err(|_| GenomeError::Arity(values.len()))?;
        Ok(Self(arr))
    }

    pub fn values(&self) -> &[f64; GENE_COUNT] {
        &self.0
    }

    /// Stable 64-bit content hash over the IEEE-754 bit patterns.
    pub fn content_hash(&self) -> u64 {
        let bits: Vec<u64> = self.0.iter().map(|v| v.to_bits()).collect();
        crate::rng::mix(0x6A09_E667_F3BC_C908, &bits)
    }

    /// One CSV row, no trailing newline.
    pub fn to_csv_row(&self, space: &ParamSpace) -> String {
        self.0
            .iter()
            .zip(space.genes())
            .map(|(v, g)| format_gene(*v, g.kind))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self, GenomeError> {
        let values = row
            .trim()
            .split(',')
            .enumerate()
            .map(|(index, field)| {
                field.trim().parse::<f64>().map_err(|_| GenomeError::Parse {
                    index,
                    value: field.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_slice(&values)
    }

    /// `NAME=value` lines in gene order.
    pub fn to_keyed(&self, space: &ParamSpace) -> String {
        let mut out = String::new();
        for (v, g) in self.0.iter().zip(space.genes()) {
            out.push_str(g.name);
            out.push('=');
            out.push_str(&format_gene(*v, g.kind));
            out.push('\n');
        }
        out
    }

    pub fn from_keyed(text: &str, space: &ParamSpace) -> Result<Self, GenomeError> {
        let keyed = Keyed::parse(text)?;
        let names: Vec<&str> = space.genes().iter().map(|g| g.name).collect();
        keyed.deny_unknown(&names)?;
        let mut values = [0.0; GENE_COUNT];
        for (slot, name) in values.iter_mut().zip(&names) {
            *slot = keyed.require(name)?;
        }
        Ok(Self(values))
    }

    /// Reads either the keyed form or a single CSV row.
    pub fn parse_any(text: &str, space: &ParamSpace) -> Result<Self, GenomeError> {
        if text.contains('=') {
            Self::from_keyed(text, space)
        } else {
            let row = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty() && !l.starts_with('#'))
                .unwrap_or("");
            Self::from_csv_row(row)
        }
    }
}

impl fmt::Display for Genome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

fn format_gene(v: f64, kind: GeneKind) -> String {
    match kind {
        GeneKind::Integer if v.fract() == 0.0 && v.abs() < 1e15 => format!("{}", v as i64),
        // Debug formatting is the shortest exact round-trip representation.
        _ => format!("{v:?}"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ViolationKind {
    NotFinite,
    BelowLower,
    AboveUpper,
    NonIntegral,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub index: usize,
    pub name: &'static str,
    pub value: f64,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "gene {} ({}) = {}: {:?}",
            self.index, self.name, self.value, self.kind
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpace {
    genes: [GeneSpec; GENE_COUNT],
}

impl Default for ParamSpace {
    fn default() -> Self {
        Self::aodv()
    }
}

impl ParamSpace {
    pub fn aodv() -> Self {
        use GeneKind::{Integer, Real};
        Self {
            genes: [
                GeneSpec::new("HELLO_INTERVAL", Real, 1.0, 20.0, 1.0),
                GeneSpec::new("ACTIVE_ROUTE_TIMEOUT", Real, 1.0, 20.0, 3.0),
                GeneSpec::new("MY_ROUTE_TIMEOUT", Real, 1.0, 40.0, 6.0),
                GeneSpec::new("NODE_TRAVERSAL_TIME", Real, 0.01, 15.0, 0.040),
                GeneSpec::new("MAX_RREQ_TIMEOUT", Real, 1.0, 100.0, 10.0),
                GeneSpec::new("NET_DIAMETER", Integer, 3.0, 100.0, 35.0),
                GeneSpec::new("ALLOWED_HELLO_LOSS", Integer, 0.0, 20.0, 2.0),
                GeneSpec::new("REQ_RETRIES", Integer, 0.0, 20.0, 2.0),
                GeneSpec::new("TTL_START", Integer, 1.0, 40.0, 1.0),
                GeneSpec::new("TTL_INCREMENT", Integer, 1.0, 20.0, 2.0),
                GeneSpec::new("TTL_THRESHOLD", Integer, 1.0, 60.0, 7.0),
            ],
        }
    }

    pub fn genes(&self) -> &[GeneSpec; GENE_COUNT] {
        &self.genes
    }

    pub fn gene(&self, index: usize) -> &GeneSpec {
        &self.genes[index]
    }

    pub fn names(&self) -> [&'static str; GENE_COUNT] {
        self.genes.each_ref().map(|g| g.name)
    }

    pub fn rfc_default(&self) -> Genome {
        Genome(self.genes.each_ref().map(|g| g.rfc_default))
    }

    pub fn repair(&self, g: &Genome) -> Result<Genome, GenomeError> {
        let mut out = g.0;
        for (i, (v, spec)) in out.iter_mut().zip(&self.genes).enumerate() {
            if v.is_nan() {
                return Err(GenomeError::NotFinite {
                    index: i,
                    name: spec.name,
                });
            }
            *v = spec.repair(*v);
        }
        Ok(Genome(out))
    }

    /// Repair of raw values of unchecked length.
    pub fn repair_slice(&self, values: &[f64]) -> Result<Genome, GenomeError> {
        self.repair(&Genome::from_slice(values)?)
    }

    /// Repair for values produced by arithmetic on valid genomes, which are
    /// always finite.
    pub(crate) fn repair_raw(&self, mut values: [f64; GENE_COUNT]) -> Genome {
        for (v, spec) in values.iter_mut().zip(&self.genes) {
            debug_assert!(v.is_finite());
            *v = spec.repair(*v);
        }
        Genome(values)
    }

    /// Every bound or integrality violation; empty means valid.
    pub fn validate(&self, g: &Genome) -> Vec<Violation> {
        let mut out = Vec::new();
        for (index, (&value, spec)) in g.0.iter().zip(&self.genes).enumerate() {
            let mut push = |kind| {
                out.push(Violation {
                    index,
                    name: spec.name,
                    value,
                    kind,
                })
            };
            if !value.is_finite() {
                push(ViolationKind::NotFinite);
                continue;
            }
            if value < spec.lower {
                push(ViolationKind::BelowLower);
            } else if value > spec.upper {
                push(ViolationKind::AboveUpper);
            }
            if spec.kind == GeneKind::Integer && value.fract() != 0.0 {
                push(ViolationKind::NonIntegral);
            }
        }
        out
    }

    pub fn is_valid(&self, g: &Genome) -> bool {
        self.validate(g).is_empty()
    }

    pub fn csv_header(&self) -> String {
        self.names().join(",")
    }
}

/// Best configuration reported for the large training instance.
pub fn reference_tuned() -> Genome {
    Genome([
        11.994, 12.439, 15.965, 8.106, 42.466, 66.0, 6.0, 9.0, 12.0, 19.0, 54.0,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rfc_defaults_in_table_order() {
        let space = ParamSpace::aodv();
        assert_eq!(
            space.rfc_default().0,
            [1.0, 3.0, 6.0, 0.040, 10.0, 35.0, 2.0, 2.0, 1.0, 2.0, 7.0]
        );
        assert_eq!(space.rfc_default().0[gene::NET_DIAMETER], 35.0);
        let rfc = space.rfc_default();
        assert_eq!(space.repair(&rfc).unwrap(), rfc);
    }

    #[test]
    fn gene_spec_invariants() {
        for g in ParamSpace::aodv().genes() {
            assert!(g.lower < g.upper, "{}", g.name);
            assert!((g.lower..=g.upper).contains(&g.rfc_default), "{}", g.name);
            if g.kind == GeneKind::Integer {
                for v in [g.lower, g.upper, g.rfc_default] {
                    assert_eq!(v.fract(), 0.0, "{}", g.name);
                }
            }
        }
    }

    #[test]
    fn repair_examples() {
        let space = ParamSpace::aodv();
        let mut g = space.rfc_default();
        g.0[gene::HELLO_INTERVAL] = 25.3;
        g.0[gene::NET_DIAMETER] = 66.4;
        g.0[gene::ALLOWED_HELLO_LOSS] = -3.2;
        let r = space.repair(&g).unwrap();
        assert_eq!(r.0[gene::HELLO_INTERVAL], 20.0);
        assert_eq!(r.0[gene::NET_DIAMETER], 66.0);
        assert_eq!(r.0[gene::ALLOWED_HELLO_LOSS], 0.0);
    }

    #[test]
    fn repair_rounds_half_away_from_zero() {
        let space = ParamSpace::aodv();
        let mut g = space.rfc_default();
        g.0[gene::TTL_START] = 2.5;
        g.0[gene::NET_DIAMETER] = 35.5;
        let r = space.repair(&g).unwrap();
        assert_eq!(r.0[gene::TTL_START], 3.0);
        assert_eq!(r.0[gene::NET_DIAMETER], 36.0);
    }

    #[test]
    fn repair_rejects_bad_input() {
        let space = ParamSpace::aodv();
        assert_eq!(space.repair_slice(&[1.0; 10]), Err(GenomeError::Arity(10)));
        let mut g = space.rfc_default();
        g.0[3] = f64::NAN;
        assert!(matches!(
            space.repair(&g),
            Err(GenomeError::NotFinite { index: 3, .. })
        ));
    }

    #[test]
    fn validate_examples() {
        let space = ParamSpace::aodv();
        assert!(space.validate(&space.rfc_default()).is_empty());
        assert!(space.validate(&reference_tuned()).is_empty());
        let mut g = space.rfc_default();
        g.0[gene::TTL_THRESHOLD] = 61.0;
        let v = space.validate(&g);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, 10);
        assert_eq!(v[0].kind, ViolationKind::AboveUpper);
        g.0[gene::TTL_THRESHOLD] = 7.5;
        assert_eq!(space.validate(&g)[0].kind, ViolationKind::NonIntegral);
    }

    #[test]
    fn text_forms() {
        let space = ParamSpace::aodv();
        let g = reference_tuned();
        assert_eq!(
            g.to_csv_row(&space),
            "11.994,12.439,15.965,8.106,42.466,66,6,9,12,19,54"
        );
        let keyed = space.rfc_default().to_keyed(&space);
        assert!(keyed.starts_with("HELLO_INTERVAL=1.0\nACTIVE_ROUTE_TIMEOUT=3.0\n"));
        assert!(keyed.contains("NODE_TRAVERSAL_TIME=0.04\n"));
        assert!(keyed.contains("NET_DIAMETER=35\n"));
        assert_eq!(Genome::from_keyed(&keyed, &space).unwrap(), space.rfc_default());
        assert!(matches!(
            Genome::from_keyed("HELLO_INTERVAL=1.0\n", &space),
            Err(GenomeError::Keyed(KeyedError::Missing(_)))
        ));
        assert!(matches!(
            Genome::from_csv_row("1,2,x"),
            Err(GenomeError::Parse { index: 2, .. })
        ));
    }

    fn any_values() -> impl Strategy<Value = [f64; GENE_COUNT]> {
        proptest::array::uniform11(-200.0f64..200.0)
    }

    proptest! {
        #[test]
        fn repair_is_idempotent_and_in_bounds(values in any_values()) {
            let space = ParamSpace::aodv();
            let once = space.repair(&Genome(values)).unwrap();
            prop_assert_eq!(space.repair(&once).unwrap(), once);
            for (v, g) in once.0.iter().zip(space.genes()) {
                prop_assert!(g.lower <= *v && *v <= g.upper);
            }
        }

        #[test]
        fn validate_agrees_with_repair(values in any_values(), snap in proptest::bool::ANY) {
            let space = ParamSpace::aodv();
            // Half the cases start from a valid genome so both branches are hit.
            let g = if snap { space.repair(&Genome(values)).unwrap() } else { Genome(values) };
            let ok = space.validate(&g).is_empty();
            prop_assert_eq!(ok, space.repair(&g).unwrap() == g);
        }

        #[test]
        fn csv_round_trip(values in any_values()) {
            let space = ParamSpace::aodv();
            let g = space.repair(&Genome(values)).unwrap();
            prop_assert_eq!(Genome::from_csv_row(&g.to_csv_row(&space)).unwrap(), g);
            prop_assert_eq!(Genome::from_keyed(&g.to_keyed(&space), &space).unwrap(), g);
        }
    }
}
