//! Random partitions of the domain, jump heights on the partition cells, and
//! the composed diffusion/advection coefficient pair.

mod gig;

pub use gig::{gig_sample, GigParams, GigSampler};

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::random_field::{FieldEvaluator, FieldRealization};
use crate::{Error, Point, Result};

/// Where a point sits relative to a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Located {
    Inside(usize),
    OnInterface,
}

enum PartitionData {
    /// 1D: sorted break points including the domain ends 0 and 1.
    Intervals { breaks: Vec<f64> },
    /// 2D: rectilinear line arrangement; cuts include 0 and 1 on both axes.
    /// Cells are indexed row-major with x fastest.
    Rectilinear {
        x_cuts: Vec<f64>,
        y_cuts: Vec<f64>,
        checkerboard: bool,
    },
}

/// Random decomposition of the domain into cells of positive measure, with
/// the jump interfaces as shared cell boundaries.
pub struct Partition {
    data: PartitionData,
}

impl Partition {
    /// 1D partition from explicit break points (must start at 0, end at 1,
    /// strictly increase).
    pub fn from_breaks(breaks: Vec<f64>) -> Result<Self> {
        if breaks.len() < 2 || breaks[0] != 0.0 || *breaks.last().unwrap() != 1.0 {
            return Err(Error::config("partition", "breaks must span [0, 1]"));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                "partition",
                "breaks must be strictly increasing (cells need positive measure)",
            ));
        }
        Ok(Partition {
            data: PartitionData::Intervals { breaks },
        })
    }

    /// 2D rectilinear partition from interior grid lines.
    pub fn rectilinear(
        mut x_interior: Vec<f64>,
        mut y_interior: Vec<f64>,
        checkerboard: bool,
    ) -> Result<Self> {
        x_interior.sort_by(f64::total_cmp);
        y_interior.sort_by(f64::total_cmp);
        for line in x_interior.iter().chain(&y_interior) {
            if !(*line > 0.0 && *line < 1.0) {
                return Err(Error::config(
                    "partition",
                    "interior lines must lie strictly inside (0, 1)",
                ));
            }
        }
        let mut x_cuts = vec![0.0];
        x_cuts.extend(&x_interior);
        x_cuts.push(1.0);
        let mut y_cuts = vec![0.0];
        y_cuts.extend(&y_interior);
        y_cuts.push(1.0);
        for cuts in [&x_cuts, &y_cuts] {
            if cuts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::config(
                    "partition",
                    "coincident partition lines leave a zero-measure cell",
                ));
            }
        }
        if checkerboard && (x_cuts.len() != 3 || y_cuts.len() != 3) {
            return Err(Error::config(
                "partition",
                "a checkerboard partition has exactly one interior line per axis",
            ));
        }
        Ok(Partition {
            data: PartitionData::Rectilinear {
                x_cuts,
                y_cuts,
                checkerboard,
            },
        })
    }

    pub fn dim(&self) -> usize {
        match self.data {
            PartitionData::Intervals { .. } => 1,
            PartitionData::Rectilinear { .. } => 2,
        }
    }

    pub fn is_checkerboard(&self) -> bool {
        matches!(
            self.data,
            PartitionData::Rectilinear {
                checkerboard: true,
                ..
            }
        )
    }

    /// Number of cells, tau.
    pub fn cell_count(&self) -> usize {
        match &self.data {
            PartitionData::Intervals { breaks } => breaks.len() - 1,
            PartitionData::Rectilinear { x_cuts, y_cuts, .. } => {
                (x_cuts.len() - 1) * (y_cuts.len() - 1)
            }
        }
    }

    pub fn cell_measure(&self, cell: usize) -> f64 {
        match &self.data {
            PartitionData::Intervals { breaks } => breaks[cell + 1] - breaks[cell],
            PartitionData::Rectilinear { x_cuts, y_cuts, .. } => {
                let nx = x_cuts.len() - 1;
                let (i, j) = (cell % nx, cell / nx);
                (x_cuts[i + 1] - x_cuts[i]) * (y_cuts[j + 1] - y_cuts[j])
            }
        }
    }

    /// 1D interior jump points.
    pub fn interior_breaks(&self) -> &[f64] {
        match &self.data {
            PartitionData::Intervals { breaks } => &breaks[1..breaks.len() - 1],
            _ => &[],
        }
    }

    /// Full cut arrays (domain ends included). The second slice is empty in 1D.
    pub fn cuts(&self) -> (&[f64], &[f64]) {
        match &self.data {
            PartitionData::Intervals { breaks } => (breaks, &[]),
            PartitionData::Rectilinear { x_cuts, y_cuts, .. } => (x_cuts, y_cuts),
        }
    }

    pub fn locate(&self, p: Point) -> Result<Located> {
        match &self.data {
            PartitionData::Intervals { breaks } => {
                if !(0.0..=1.0).contains(&p[0]) {
                    return Err(Error::DomainPoint { x: p[0], y: p[1] });
                }
                Ok(locate_axis(breaks, p[0]))
            }
            PartitionData::Rectilinear { x_cuts, y_cuts, .. } => {
                if !(0.0..=1.0).contains(&p[0]) || !(0.0..=1.0).contains(&p[1]) {
                    return Err(Error::DomainPoint { x: p[0], y: p[1] });
                }
                match (locate_axis(x_cuts, p[0]), locate_axis(y_cuts, p[1])) {
                    (Located::Inside(i), Located::Inside(j)) => {
                        Ok(Located::Inside(j * (x_cuts.len() - 1) + i))
                    }
                    _ => Ok(Located::OnInterface),
                }
            }
        }
    }

    /// Does the open box (lo, hi) meet any interface?
    pub fn has_interface_in_box(&self, lo: Point, hi: Point) -> bool {
        let (x_cuts, y_cuts) = self.cuts();
        let crosses = |cuts: &[f64], a: f64, b: f64| {
            if cuts.len() < 3 {
                return false;
            }
            cuts[1..cuts.len() - 1].iter().any(|&c| c > a && c < b)
        };
        match self.dim() {
            1 => crosses(x_cuts, lo[0], hi[0]),
            _ => crosses(x_cuts, lo[0], hi[0]) || crosses(y_cuts, lo[1], hi[1]),
        }
    }
}

fn locate_axis(cuts: &[f64], x: f64) -> Located {
    // boundary cuts are not interfaces; points on them belong to the end cells
    if x <= cuts[0] {
        return Located::Inside(0);
    }
    if x >= cuts[cuts.len() - 1] {
        return Located::Inside(cuts.len() - 2);
    }
    match cuts.binary_search_by(|probe| probe.total_cmp(&x)) {
        Ok(_) => Located::OnInterface,
        Err(ins) => Located::Inside(ins - 1),
    }
}

/// Draw a 1D partition: tau = Poisson(intensity) + 2 cells from tau - 1
/// sorted uniforms.
pub fn sample_partition_1d<R: Rng + ?Sized>(intensity: f64, rng: &mut R) -> Result<Partition> {
    if !(intensity > 0.0) {
        return Err(Error::config("partition.intensity", "must be positive"));
    }
    let poisson =
        Poisson::new(intensity).map_err(|e| Error::config("partition.intensity", e.to_string()))?;
    let tau = poisson.sample(rng) as usize + 2;
    loop {
        let mut points: Vec<f64> = (0..tau - 1).map(|_| rng.random::<f64>()).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();
        if points.len() == tau - 1 && points.first() != Some(&0.0) {
            let mut breaks = vec![0.0];
            breaks.extend(points);
            breaks.push(1.0);
            return Partition::from_breaks(breaks);
        }
        // colliding draws have probability zero; redraw so every cell keeps
        // positive measure
    }
}

/// The two 2D partition families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition2dKind {
    /// two horizontal and two vertical lines whose crossings lie in
    /// (0.2, 0.8)^2, giving tau = 9
    Heterogeneous,
    /// one center point in [0.4, 0.6]^2 splitting the square into 4 cells
    Checkerboard,
}

/// Draw a 2D rectilinear partition. Heterogeneous draws the two vertical then
/// the two horizontal line positions; checkerboard draws the center point.
pub fn sample_partition_2d<R: Rng + ?Sized>(kind: Partition2dKind, rng: &mut R) -> Partition {
    match kind {
        Partition2dKind::Heterogeneous => {
            let x1 = 0.2 + 0.6 * rng.random::<f64>();
            let x2 = 0.2 + 0.6 * rng.random::<f64>();
            let y1 = 0.2 + 0.6 * rng.random::<f64>();
            let y2 = 0.2 + 0.6 * rng.random::<f64>();
            Partition::rectilinear(vec![x1, x2], vec![y1, y2], false)
                .expect("interior lines drawn in (0.2, 0.8)")
        }
        Partition2dKind::Checkerboard => {
            let xc = 0.4 + 0.2 * rng.random::<f64>();
            let yc = 0.4 + 0.2 * rng.random::<f64>();
            Partition::rectilinear(vec![xc], vec![yc], true).expect("center drawn in [0.4, 0.6]^2")
        }
    }
}

/// Law of the jump heights attached to the partition cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum JumpLaw {
    /// i.i.d. uniform heights on [lo, hi]
    Uniform { lo: f64, hi: f64 },
    /// i.i.d. biased GIG draws with squared-L2 budget `bias`
    Gig { params: GigParams, bias: f64 },
    /// one uniform draw on [lo, hi]; its value on the lower-left/upper-right
    /// cells, the reciprocal on the other two
    CheckerboardReciprocal { lo: f64, hi: f64 },
}

impl JumpLaw {
    pub fn build(&self) -> Result<JumpSampler> {
        match *self {
            JumpLaw::Uniform { lo, hi } => {
                if !(lo >= 0.0 && hi >= lo) {
                    return Err(Error::config("jumps", "uniform law needs 0 <= lo <= hi"));
                }
                Ok(JumpSampler::Uniform { lo, hi })
            }
            JumpLaw::Gig { params, bias } => Ok(JumpSampler::Gig(GigSampler::new(params, bias)?)),
            JumpLaw::CheckerboardReciprocal { lo, hi } => {
                if !(lo > 0.0 && hi >= lo) {
                    return Err(Error::config("jumps", "reciprocal law needs 0 < lo <= hi"));
                }
                Ok(JumpSampler::CheckerboardReciprocal { lo, hi })
            }
        }
    }
}

/// Sampler with any tabulation work already done.
pub enum JumpSampler {
    Uniform { lo: f64, hi: f64 },
    Gig(GigSampler),
    CheckerboardReciprocal { lo: f64, hi: f64 },
}

/// Per-cell jump heights plus the declared sampling-bias budget and cap.
#[derive(Debug, Clone)]
pub struct JumpHeights {
    pub values: Vec<f64>,
    /// declared L^s sampling bias (s = 2); zero for exactly sampled laws
    pub bias_budget: f64,
    /// upper bound on the heights, +inf when none is imposed
    pub cap: f64,
}

/// Draw one height per partition cell.
pub fn sample_jump_heights<R: Rng + ?Sized>(
    sampler: &JumpSampler,
    partition: &Partition,
    rng: &mut R,
) -> Result<JumpHeights> {
    let tau = partition.cell_count();
    match sampler {
        JumpSampler::Uniform { lo, hi } => {
            let values = (0..tau)
                .map(|_| lo + (hi - lo) * rng.random::<f64>())
                .collect();
            Ok(JumpHeights {
                values,
                bias_budget: 0.0,
                cap: *hi,
            })
        }
        JumpSampler::Gig(gig) => {
            let values = (0..tau).map(|_| gig.sample(rng)).collect();
            Ok(JumpHeights {
                values,
                bias_budget: gig.bias(),
                cap: f64::INFINITY,
            })
        }
        JumpSampler::CheckerboardReciprocal { lo, hi } => {
            if !partition.is_checkerboard() {
                return Err(Error::config(
                    "jumps",
                    "reciprocal heights require a checkerboard partition",
                ));
            }
            let p1 = lo + (hi - lo) * rng.random::<f64>();
            let p2 = 1.0 / p1;
            // row-major cells: lower-left, lower-right, upper-left, upper-right
            Ok(JumpHeights {
                values: vec![p1, p2, p2, p1],
                bias_budget: 0.0,
                cap: 1.0 / lo,
            })
        }
    }
}

/// Pointwise transform of the Gaussian field inside the diffusion
/// coefficient. `Zero` switches the continuous part off entirely (pure jump
/// field); the composed coefficient must then stay positive through the
/// heights alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiMap {
    Exp,
    Zero,
}

impl PhiMap {
    #[inline]
    pub fn apply(self, w: f64) -> f64 {
        match self {
            PhiMap::Exp => w.exp(),
            PhiMap::Zero => 0.0,
        }
    }
}

pub type ScalarField = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Pathwise evaluators for the diffusion coefficient
/// `a = a_bar + Phi(W_N) + P` and the advection coefficient
/// `b = min(a * b1, b2)` (componentwise).
///
/// Every query carries the id of the partition cell containing the point, so
/// interface membership is never decided here by floating-point geometry;
/// the (point, cell) pairs come from the mesh. [`CoefficientPair::diffusion_at`]
/// is the convenience path that locates the cell and reports ambiguity on
/// interfaces.
pub struct CoefficientPair {
    field: FieldEvaluator,
    phi: PhiMap,
    partition: Arc<Partition>,
    heights: Vec<f64>,
    a_bar: Option<ScalarField>,
    b1: Option<VectorField>,
    b2: Option<VectorField>,
}

/// Compose the coefficient pair from a field realization, a partition with
/// heights, the trend `a_bar` (None for zero), the field transform, and the
/// advection profiles (`b2 = None` means no deterministic cap).
pub fn compose_coefficients(
    field: &FieldRealization,
    partition: Arc<Partition>,
    heights: &JumpHeights,
    a_bar: Option<ScalarField>,
    phi: PhiMap,
    b1: Option<VectorField>,
    b2: Option<VectorField>,
) -> Result<CoefficientPair> {
    if heights.values.len() != partition.cell_count() {
        return Err(Error::config(
            "jumps",
            format!(
                "{} heights for {} partition cells",
                heights.values.len(),
                partition.cell_count()
            ),
        ));
    }
    if heights.values.iter().any(|&h| h < 0.0) {
        return Err(Error::config("jumps", "heights must be nonnegative"));
    }
    let field = match phi {
        PhiMap::Zero => FieldEvaluator::Zero,
        PhiMap::Exp => field.evaluator(),
    };
    Ok(CoefficientPair {
        field,
        phi,
        partition,
        heights: heights.values.clone(),
        a_bar,
        b1,
        b2,
    })
}

impl CoefficientPair {
    pub fn partition(&self) -> &Arc<Partition> {
        &self.partition
    }

    /// Diffusion coefficient at `p` inside partition cell `cell`.
    pub fn diffusion(&self, p: Point, cell: usize) -> f64 {
        let trend = self.a_bar.as_ref().map_or(0.0, |f| f(p));
        let continuous = match self.phi {
            PhiMap::Zero => 0.0,
            PhiMap::Exp => self.phi.apply(self.field.eval(p)),
        };
        trend + continuous + self.heights[cell]
    }

    /// Diffusion and advection in one field evaluation.
    pub fn values(&self, p: Point, cell: usize) -> (f64, [f64; 2]) {
        let a = self.diffusion(p, cell);
        let b = match &self.b1 {
            None => [0.0, 0.0],
            Some(b1) => {
                let scaled = b1(p).map(|c| c * a);
                match &self.b2 {
                    None => scaled,
                    Some(b2) => {
                        let cap = b2(p);
                        [scaled[0].min(cap[0]), scaled[1].min(cap[1])]
                    }
                }
            }
        };
        (a, b)
    }

    pub fn advection(&self, p: Point, cell: usize) -> [f64; 2] {
        self.values(p, cell).1
    }

    /// Locate the cell first; errors when `p` sits on an interface.
    pub fn diffusion_at(&self, p: Point) -> Result<f64> {
        match self.partition.locate(p)? {
            Located::Inside(cell) => Ok(self.diffusion(p, cell)),
            Located::OnInterface => Err(Error::AmbiguousInterface { x: p[0], y: p[1] }),
        }
    }
}
