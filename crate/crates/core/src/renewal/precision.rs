//! Storage formats for per-node arrays.
//!
//! Values are widened to `f32` on load and narrowed with round-to-nearest-even
//! on store; every arithmetic operation in the engines sees `f32` or wider.

use half::{bf16, f16};

use crate::models::Compartment;

/// Real-valued storage cell.
pub trait Cell: Copy + Send + Sync + Default + 'static {
    fn load(self) -> f32;
    fn store(x: f32) -> Self;
}

impl Cell for f32 {
    #[inline(always)]
    fn load(self) -> f32 {
        self
    }
    #[inline(always)]
    fn store(x: f32) -> Self {
        x
    }
}

impl Cell for f16 {
    #[inline(always)]
    fn load(self) -> f32 {
        self.to_f32()
    }
    #[inline(always)]
    fn store(x: f32) -> Self {
        f16::from_f32(x)
    }
}

impl Cell for bf16 {
    #[inline(always)]
    fn load(self) -> f32 {
        self.to_f32()
    }
    #[inline(always)]
    fn store(x: f32) -> Self {
        bf16::from_f32(x)
    }
}

/// Compartment storage cell.
pub trait StateCell: Copy + Send + Sync + Default + 'static {
    fn get(self) -> Compartment;
    fn put(c: Compartment) -> Self;
}

impl StateCell for u32 {
    #[inline(always)]
    fn get(self) -> Compartment {
        self as Compartment
    }
    #[inline(always)]
    fn put(c: Compartment) -> Self {
        c as u32
    }
}

impl StateCell for i8 {
    #[inline(always)]
    fn get(self) -> Compartment {
        self as u8
    }
    #[inline(always)]
    fn put(c: Compartment) -> Self {
        c as i8
    }
}

pub trait Precision: Send + Sync + 'static {
    type State: StateCell;
    type Age: Cell;
    type Infectivity: Cell;
    type Weight: Cell;
    const NAME: &'static str;
}

/// 32-bit storage everywhere.
#[derive(Debug, Clone, Copy)]
pub struct FullPrecision;

/// 8-bit states, binary16 ages, bfloat16 infectivity and weights.
#[derive(Debug, Clone, Copy)]
pub struct MixedPrecision;

impl Precision for FullPrecision {
    type State = u32;
    type Age = f32;
    type Infectivity = f32;
    type Weight = f32;
    const NAME: &'static str = "fp32";
}

impl Precision for MixedPrecision {
    type State = i8;
    type Age = f16;
    type Infectivity = bf16;
    type Weight = bf16;
    const NAME: &'static str = "mixed";
}

/// Per-node dynamic arrays in the storage format of `P`.
#[derive(Debug, Clone)]
pub struct NodeArrays<P: Precision> {
    pub states: Vec<P::State>,
    pub ages: Vec<P::Age>,
    pub infectivity: Vec<P::Infectivity>,
}

impl<P: Precision> NodeArrays<P> {
    pub fn new(n: usize) -> Self {
        NodeArrays {
            states: vec![P::State::put(0); n],
            ages: vec![P::Age::store(0.0); n],
            infectivity: vec![P::Infectivity::store(0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Re-encode into another storage format.
    pub fn convert<Q: Precision>(&self) -> NodeArrays<Q> {
        NodeArrays {
            states: self.states.iter().map(|s| Q::State::put(s.get())).collect(),
            ages: self.ages.iter().map(|a| Q::Age::store(a.load())).collect(),
            infectivity: self.infectivity.iter().map(|x| Q::Infectivity::store(x.load())).collect(),
        }
    }
}

pub fn encode_weights<W: Cell>(w: &[f32]) -> Vec<W> {
    w.iter().map(|&x| W::store(x)).collect()
}
