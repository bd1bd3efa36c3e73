//! Post-tracking query evaluation over movable objects.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::geometry::normalize_degrees;
use crate::model::{CameraConfig, MovableObject, RoadNetwork};
use crate::predicate::{self, Bindings, EvalOptions, ObjRef, Predicate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum HeadingError {
    #[error("object has no sample at the requested frame")]
    MissingSample,
    #[error("track has a single sample")]
    SingleSample,
    #[error("sample has no world location")]
    NoLocation,
    #[error("object is stationary")]
    Stationary,
}

/// Moving direction at `frame_index`, degrees counterclockwise from east,
/// from the displacement between this sample and the one `window` samples
/// earlier (later, at the start of the track).
pub fn object_heading(track: &MovableObject, frame_index: usize, window: usize) -> Result<f64, HeadingError> {
    let pos = track.sample_position(frame_index).ok_or(HeadingError::MissingSample)?;
    let window = window.max(1);
    let (from, to) = if pos > 0 {
        (pos.saturating_sub(window), pos)
    } else {
        (0, window.min(track.samples.len() - 1))
    };
    if from == to {
        return Err(HeadingError::SingleSample);
    }
    let a = track.samples[from].location.ok_or(HeadingError::NoLocation)?;
    let b = track.samples[to].location.ok_or(HeadingError::NoLocation)?;
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    if (dx * dx + dy * dy).sqrt() < 1e-6 {
        return Err(HeadingError::Stationary);
    }
    Ok(normalize_degrees(dy.atan2(dx).to_degrees()))
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QueryMatch {
    pub frame_index: usize,
    /// Object ids in variable order.
    pub oids: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryStats {
    /// Objects considered for some variable slot.
    pub candidates: u64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOptions {
    pub type_prefilter: bool,
    pub eval: EvalOptions,
}

impl Default for QueryOptions {
    fn default() -> Self {
        Self { type_prefilter: true, eval: EvalOptions::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueryOutput {
    pub matches: Vec<QueryMatch>,
    pub stats: QueryStats,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for rest in permutations(n - 1) {
        for i in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(i, n - 1);
            out.push(p);
        }
    }
    out
}

/// Variable permutations that leave `p` unchanged, as index maps over `vars`.
pub fn symmetries(p: &Predicate, vars: &[ObjRef]) -> Vec<Vec<usize>> {
    let key = p.canonical_key();
    permutations(vars.len())
        .into_iter()
        .filter(|perm| perm.iter().enumerate().any(|(i, &j)| i != j))
        .filter(|perm| {
            let renamed = p.rename(&|o| match vars.iter().position(|v| *v == o) {
                Some(i) => vars[perm[i]],
                None => o,
            });
            renamed.canonical_key() == key
        })
        .collect()
}

/// All `(frame, tuple)` pairs for which `p` holds, for one video.
///
/// Tuples bind distinct objects. Tuples equivalent under a symmetry of `p`
/// are reported once, as the lexicographically smallest ordering.
pub fn execute_query(
    objects: &[MovableObject],
    camera: &CameraConfig,
    roads: &RoadNetwork,
    p: &Predicate,
    opts: &QueryOptions,
) -> QueryOutput {
    let mut vars: Vec<ObjRef> = p.object_vars().into_iter().collect();
    if vars.is_empty() {
        // Object-free predicates select frames; report each live object.
        vars.push(ObjRef(0));
    }
    let k = vars.len();
    let allowed: Vec<Option<BTreeSet<String>>> = vars
        .iter()
        .map(|v| if opts.type_prefilter { predicate::allowed_types(p, *v) } else { None })
        .collect();
    let syms = symmetries(p, &vars);

    let mut order: Vec<&MovableObject> = objects.iter().collect();
    order.sort_by(|a, b| a.oid.cmp(&b.oid));

    let mut out = QueryOutput::default();
    let mut tuple: Vec<usize> = Vec::with_capacity(k);
    for frame in &camera.frames {
        let f = frame.frame_index;
        let live: Vec<usize> = (0..order.len()).filter(|&i| order[i].sample_at(f).is_some()).collect();
        if live.len() < k {
            continue;
        }
        let slots: Vec<Vec<usize>> = allowed
            .iter()
            .map(|a| live.iter().copied().filter(|&i| a.as_ref().is_none_or(|s| s.contains(&order[i].object_type))).collect())
            .collect();
        out.stats.candidates += slots.iter().map(|s| s.len() as u64).sum::<u64>();
        let mut ctx = Ctx { p, vars: &vars, order: &order, slots: &slots, syms: &syms, roads, frame, opts, out: &mut out };
        tuple.clear();
        ctx.enumerate(&mut tuple);
    }
    out.matches.sort();
    out
}

struct Ctx<'a> {
    p: &'a Predicate,
    vars: &'a [ObjRef],
    order: &'a [&'a MovableObject],
    slots: &'a [Vec<usize>],
    syms: &'a [Vec<usize>],
    roads: &'a RoadNetwork,
    frame: &'a crate::model::CameraFrame,
    opts: &'a QueryOptions,
    out: &'a mut QueryOutput,
}

impl Ctx<'_> {
    fn enumerate(&mut self, tuple: &mut Vec<usize>) {
        let depth = tuple.len();
        if depth == self.vars.len() {
            self.visit(tuple);
            return;
        }
        for &cand in &self.slots[depth] {
            if tuple.contains(&cand) {
                continue;
            }
            tuple.push(cand);
            self.enumerate(tuple);
            tuple.pop();
        }
    }

    fn visit(&mut self, tuple: &[usize]) {
        // `order` is sorted by oid, so index order is oid order.
        for perm in self.syms {
            let image: Vec<usize> = (0..tuple.len()).map(|i| tuple[perm[i]]).collect();
            if image.as_slice() < tuple {
                return;
            }
        }
        let bound: Vec<(ObjRef, &MovableObject)> =
            self.vars.iter().zip(tuple).map(|(v, &i)| (*v, self.order[i])).collect();
        let bindings = Bindings { objects: &bound, camera: self.frame, roads: self.roads };
        self.out.stats.evaluations += 1;
        if let Ok(true) = predicate::evaluate_with(self.p, &bindings, self.frame.frame_index, &self.opts.eval) {
            self.out.matches.push(QueryMatch {
                frame_index: self.frame.frame_index,
                oids: tuple.iter().map(|&i| self.order[i].oid.clone()).collect(),
            });
        }
    }
}
