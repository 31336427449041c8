//! JSON forms of the library objects.
//!
//! Complex numbers are `[re, im]` pairs, boxes are `[x0, y0, x1, y1]`.
//! Non-finite reals are written as the strings `"inf"`, `"-inf"` and `"nan"`
//! so that every document parses back to the same value.

use expskel_core::currents::{PairingRow, PairingTable};
use expskel_core::expsum::{ComplexVec, ExpSum, ExpSumError, ExpTerm};
use expskel_core::genericity::{Classification, GenericityReport};
use expskel_core::geometry::Rect;
use expskel_core::pencil::{ExtendedComplex, Leg, PencilError, PencilSpec, PencilVerification, SingularSet};
use expskel_core::section::{ClusterSet, Net, SectionError, SectionSpec, Surgery};
use expskel_core::skeleton::Skeleton2D;
use expskel_core::solve::{BoundKind, BoundReport, RootMode, RootSet};
use num_complex::Complex64;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Cx(pub [f64; 2]);

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx([z.re, z.im])
    }
}

impl From<Cx> for Complex64 {
    fn from(c: Cx) -> Self {
        Complex64::new(c.0[0], c.0[1])
    }
}

fn cxs(v: &[Complex64]) -> Vec<Cx> {
    v.iter().copied().map(Cx::from).collect()
}

fn complexes(v: &[Cx]) -> Vec<Complex64> {
    v.iter().copied().map(Complex64::from).collect()
}

/// A real that may be infinite or NaN.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Real(pub f64);

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let x = self.0;
        if x.is_finite() {
            s.serialize_f64(x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Real(x)),
            Raw::Text(t) => match t.as_str() {
                "inf" => Ok(Real(f64::INFINITY)),
                "-inf" => Ok(Real(f64::NEG_INFINITY)),
                "nan" => Ok(Real(f64::NAN)),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}

pub fn rect_of(b: [f64; 4]) -> Rect {
    Rect::new(b[0], b[1], b[2], b[3])
}

pub fn box_of(r: &Rect) -> [f64; 4] {
    [r.x0, r.y0, r.x1, r.y1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDto {
    pub alpha: Cx,
    pub m: Vec<Cx>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SumDto {
    pub dim: usize,
    pub terms: Vec<TermDto>,
}

impl SumDto {
    pub fn to_sum(&self) -> Result<ExpSum, ExpSumError> {
        ExpSum::new(self.dim, self.terms.iter().map(|t| ExpTerm::new(t.alpha.into(), complexes(&t.m))))
    }
}

impl From<&ExpSum> for SumDto {
    fn from(s: &ExpSum) -> Self {
        SumDto {
            dim: s.dim(),
            terms: s.terms().map(|t| TermDto { alpha: t.alpha.into(), m: cxs(&t.exponent.0) }).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDto {
    pub epsilon: f64,
    pub periodic: bool,
    pub domain: [f64; 4],
    pub points: Vec<Cx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover_radius: Option<Real>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_met: Option<bool>,
}

impl NetDto {
    /// The net with its quality and covering radius measured afresh.
    pub fn to_net(&self) -> Result<Net, SectionError> {
        let mut net = Net::from_points(complexes(&self.points), self.epsilon, rect_of(self.domain), self.periodic)?;
        if let Some(t) = self.target_met {
            net.target_met = t;
        }
        Ok(net)
    }
}

impl From<&Net> for NetDto {
    fn from(n: &Net) -> Self {
        NetDto {
            epsilon: n.epsilon,
            periodic: n.periodic,
            domain: box_of(&n.domain),
            points: cxs(&n.points),
            delta: Some(Real(n.delta)),
            cover_radius: Some(Real(n.cover_radius)),
            target_met: Some(n.target_met),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PencilDto {
    pub exponents: Vec<Cx>,
    pub alpha0: Vec<Cx>,
    pub alphainf: Vec<Cx>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
}

impl PencilDto {
    pub fn to_pencil(&self) -> Result<PencilSpec, PencilError> {
        PencilSpec::new(complexes(&self.exponents), complexes(&self.alpha0), complexes(&self.alphainf), self.r0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDto {
    pub delta_r: Real,
    pub delta_c: Real,
    pub delta_c_origin: Real,
    pub delta_set: Real,
    pub strongly_basic: bool,
    pub witness: Vec<usize>,
    pub margins: Vec<(usize, Real)>,
    pub simplices: usize,
}

impl From<&GenericityReport> for ReportDto {
    fn from(r: &GenericityReport) -> Self {
        ReportDto {
            delta_r: Real(r.delta_r),
            delta_c: Real(r.delta_c),
            delta_c_origin: Real(r.delta_c_origin),
            delta_set: Real(r.delta_set),
            strongly_basic: r.strongly_basic,
            witness: r.witness.clone(),
            margins: r.margins.iter().map(|&(s, q)| (s, Real(q))).collect(),
            simplices: r.simplices,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyDto {
    #[serde(flatten)]
    pub report: ReportDto,
    pub basic: Option<bool>,
    pub strictly_basic: Option<bool>,
    /// No stratum of the skeleton met the window.
    pub vacuous: bool,
    pub catalog: Vec<Vec<usize>>,
}

impl From<&Classification> for CertifyDto {
    fn from(c: &Classification) -> Self {
        CertifyDto {
            report: (&c.report).into(),
            basic: c.basic,
            strictly_basic: c.strictly_basic,
            vacuous: c.vacuous,
            catalog: c.catalog.simplices.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellDto {
    pub term: usize,
    pub polygon: Vec<Cx>,
    pub clipped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeDto {
    pub active: Vec<usize>,
    pub cells: Vec<usize>,
    pub start: Cx,
    pub end: Cx,
    pub clipped_start: bool,
    pub clipped_end: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexDto {
    pub point: Cx,
    pub active: Vec<usize>,
    pub edges: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkeletonDto {
    pub window: [f64; 4],
    pub generic: bool,
    pub cells: Vec<CellDto>,
    pub edges: Vec<EdgeDto>,
    pub vertices: Vec<VertexDto>,
}

impl From<&Skeleton2D> for SkeletonDto {
    fn from(s: &Skeleton2D) -> Self {
        SkeletonDto {
            window: box_of(&s.window),
            generic: s.is_generic(),
            cells: s
                .cells
                .iter()
                .map(|c| CellDto { term: c.term, polygon: cxs(&c.polygon), clipped: c.clipped })
                .collect(),
            edges: s
                .edges
                .iter()
                .map(|e| EdgeDto {
                    active: e.active.clone(),
                    cells: e.cells.clone(),
                    start: e.start.into(),
                    end: e.end.into(),
                    clipped_start: e.clipped_start,
                    clipped_end: e.clipped_end,
                })
                .collect(),
            vertices: s
                .vertices
                .iter()
                .map(|v| VertexDto { point: v.point.into(), active: v.active.clone(), edges: v.edges.clone() })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootDto {
    pub location: Vec<Cx>,
    pub multiplicity: u32,
    pub residual: Real,
    pub near_boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSetDto {
    pub mode: String,
    pub certified_count: Option<i64>,
    /// Multiplicity-weighted number of roots.
    pub total: u64,
    pub points: Vec<RootDto>,
}

pub fn mode_name(m: RootMode) -> &'static str {
    match m {
        RootMode::Zeros => "zeros",
        RootMode::Critical => "critical",
        RootMode::CriticalZeros => "critical-zeros",
    }
}

impl From<&RootSet> for RootSetDto {
    fn from(r: &RootSet) -> Self {
        RootSetDto {
            mode: mode_name(r.mode).to_string(),
            certified_count: r.certified_count,
            total: r.total(),
            points: r
                .points
                .iter()
                .map(|p| RootDto {
                    location: cxs(&p.location.0),
                    multiplicity: p.multiplicity,
                    residual: Real(p.residual),
                    near_boundary: p.near_boundary,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReportDto {
    pub kind: String,
    pub c_used: Real,
    pub c1: Option<Real>,
    pub violations: Vec<Vec<Cx>>,
    pub min_margin: Real,
    pub grid: (usize, usize),
    pub checked: usize,
    pub passed: bool,
}

impl From<&BoundReport> for BoundReportDto {
    fn from(b: &BoundReport) -> Self {
        BoundReportDto {
            kind: match b.kind {
                BoundKind::ZeroContainment => "zero-containment",
                BoundKind::C1Lower => "c1-lower",
            }
            .to_string(),
            c_used: Real(b.c_used),
            c1: b.c1.map(Real),
            violations: b.violations.iter().map(|v: &ComplexVec| cxs(&v.0)).collect(),
            min_margin: Real(b.min_margin),
            grid: b.grid,
            checked: b.checked,
            passed: b.passed,
        }
    }
}

/// `t` on the Riemann sphere: `[re, im]` or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExtDto {
    Finite(Cx),
    Infinite(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl From<ExtendedComplex> for ExtDto {
    fn from(t: ExtendedComplex) -> Self {
        match t {
            ExtendedComplex::Finite(z) => ExtDto::Finite(z.into()),
            ExtendedComplex::Infinity => ExtDto::Infinite(InfTag::Inf),
        }
    }
}

impl From<ExtDto> for ExtendedComplex {
    fn from(t: ExtDto) -> Self {
        match t {
            ExtDto::Finite(z) => ExtendedComplex::Finite(z.into()),
            ExtDto::Infinite(_) => ExtendedComplex::Infinity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularPointDto {
    pub z: Cx,
    pub t: ExtDto,
    pub multiplicity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularSetDto {
    pub points: Vec<SingularPointDto>,
    pub base_points: Vec<Cx>,
    pub base_orders: Vec<u32>,
    pub wronskian_count: i64,
    pub total: u64,
}

impl From<&SingularSet> for SingularSetDto {
    fn from(s: &SingularSet) -> Self {
        SingularSetDto {
            points: s
                .points
                .iter()
                .map(|p| SingularPointDto { z: p.z.into(), t: p.t.into(), multiplicity: p.multiplicity })
                .collect(),
            base_points: cxs(&s.base_points),
            base_orders: s.base_orders.clone(),
            wronskian_count: s.wronskian_count,
            total: s.total(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberDto {
    pub t: ExtDto,
    /// `None` at the root of the tree.
    pub leg: Option<usize>,
    pub tau: Real,
    pub zeros: usize,
    pub violations: Vec<Cx>,
    pub min_margin: Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilVerificationDto {
    pub c: Real,
    pub fibers: Vec<FiberDto>,
    pub vertex_distance: Option<Real>,
    pub vertex_ok: Option<bool>,
    pub singular_c: Real,
    pub singular_violations: Vec<Cx>,
    pub passed: bool,
}

impl From<&PencilVerification> for PencilVerificationDto {
    fn from(v: &PencilVerification) -> Self {
        PencilVerificationDto {
            c: Real(v.c),
            fibers: v
                .fibers
                .iter()
                .map(|f| FiberDto {
                    t: f.t.into(),
                    leg: match f.coord.leg {
                        Leg::Root => None,
                        Leg::Leg(j) => Some(j),
                    },
                    tau: Real(f.coord.tau),
                    zeros: f.zeros,
                    violations: cxs(&f.violations),
                    min_margin: Real(f.min_margin),
                })
                .collect(),
            vertex_distance: v.vertex_distance.map(Real),
            vertex_ok: v.vertex_ok,
            singular_c: Real(v.singular_c),
            singular_violations: cxs(&v.singular_violations),
            passed: v.passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PencilOutput {
    pub singular: SingularSetDto,
    /// Winding number of the Wronskian on the window boundary.
    pub winding: i64,
    pub verification: PencilVerificationDto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionSpecDto {
    pub net: NetDto,
    pub amplitudes: Vec<Cx>,
    pub k: f64,
    pub cutoff_radius: Real,
    /// Number of terms of the global sum, lattice images included.
    pub sites: usize,
    pub low_k: bool,
}

impl From<&SectionSpec> for SectionSpecDto {
    fn from(s: &SectionSpec) -> Self {
        SectionSpecDto {
            net: (&s.net).into(),
            amplitudes: cxs(&s.amplitudes),
            k: s.k,
            cutoff_radius: Real(s.cutoff_radius),
            sites: s.sites.len(),
            low_k: s.low_k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDto {
    pub center: Cx,
    pub members: Vec<Cx>,
    pub hits: usize,
    pub min_datum: Real,
    pub merged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSetDto {
    pub clusters: Vec<ClusterDto>,
    pub c3: f64,
    pub c4: f64,
    pub r1: f64,
    pub scale: f64,
    pub grid_points: usize,
}

impl From<&ClusterSet> for ClusterSetDto {
    fn from(c: &ClusterSet) -> Self {
        ClusterSetDto {
            clusters: c
                .clusters
                .iter()
                .map(|k| ClusterDto {
                    center: k.center.into(),
                    members: cxs(&k.members),
                    hits: k.hits,
                    min_datum: Real(k.min_datum),
                    merged: k.merged,
                })
                .collect(),
            c3: c.c3,
            c4: c.c4,
            r1: c.r1,
            scale: c.scale,
            grid_points: c.grid_points,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryClusterDto {
    pub center: Cx,
    pub members: Vec<Cx>,
    pub local_sites: Vec<usize>,
    pub shift: Cx,
    pub epsilon_hat: Cx,
    pub margin: Real,
    pub tries: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurgeryDto {
    pub clusters: Vec<SurgeryClusterDto>,
    pub r1: f64,
    pub c3: f64,
    pub c4: f64,
    pub scale: f64,
    pub k: f64,
}

impl From<&Surgery> for SurgeryDto {
    fn from(s: &Surgery) -> Self {
        SurgeryDto {
            clusters: s
                .clusters
                .iter()
                .map(|c| SurgeryClusterDto {
                    center: c.center.into(),
                    members: cxs(&c.members),
                    local_sites: c.local_sites.clone(),
                    shift: c.shift.into(),
                    epsilon_hat: c.epsilon_hat.into(),
                    margin: Real(c.margin),
                    tries: c.tries,
                })
                .collect(),
            r1: s.r1,
            c3: s.c3,
            c4: s.c4,
            scale: s.scale,
            k: s.k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionCheckDto {
    /// `section_skeleton` agreed with the Voronoi diagram.
    pub skeleton_matches_voronoi: bool,
    pub zeros: u64,
    /// Largest distance from a zero to the skeleton.
    pub max_zero_distance: Real,
    /// The same distance times `kε`.
    pub scaled_zero_distance: Real,
    /// Smallest datum of the surgered field over the cluster balls.
    pub surgery_margin: Option<Real>,
    /// Grid points outside the balls where the surgered field differs from `s`.
    pub locality_violations: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionOutput {
    pub section: SectionSpecDto,
    pub clusters: ClusterSetDto,
    pub surgery: Option<SurgeryDto>,
    pub verification: SectionCheckDto,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingRowDto {
    pub k: f64,
    pub epsilon: f64,
    pub psi: String,
    pub zero_pairing: Real,
    pub beta_pairing: Real,
    pub gap_over_k: Real,
    pub omega_pairing: Real,
    pub omega_gap: Real,
    pub zero_count: u64,
    pub boundary_zeros: usize,
    pub net_points: usize,
    pub note: Option<String>,
}

impl From<&PairingRow> for PairingRowDto {
    fn from(r: &PairingRow) -> Self {
        PairingRowDto {
            k: r.k,
            epsilon: r.epsilon,
            psi: r.psi.clone(),
            zero_pairing: Real(r.zero_pairing),
            beta_pairing: Real(r.beta_pairing),
            gap_over_k: Real(r.gap_over_k),
            omega_pairing: Real(r.omega_pairing),
            omega_gap: Real(r.omega_gap),
            zero_count: r.zero_count,
            boundary_zeros: r.boundary_zeros,
            net_points: r.net_points,
            note: r.note.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingTableDto {
    pub rows: Vec<PairingRowDto>,
}

impl From<&PairingTable> for PairingTableDto {
    fn from(t: &PairingTable) -> Self {
        PairingTableDto { rows: t.rows.iter().map(PairingRowDto::from).collect() }
    }
}
