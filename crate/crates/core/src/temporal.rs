//! Discrete time points, clopen intervals and the endpoint grid used by
//! normalization.
//!
//! Everything here is generic over the integer type used for time ticks
//! ([`Tick`]). The crate root fixes `u64` through type aliases; other unsigned
//! widths work the same way.

use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use num_traits::{PrimInt, Unsigned};

use crate::error::{Error, Result};

/// Unsigned integer type usable as a discrete time tick.
pub trait Tick:
    PrimInt + Unsigned + Hash + Debug + Display + FromStr + Send + Sync + 'static
{
}

impl Tick for u8 {}
impl Tick for u16 {}
impl Tick for u32 {}
impl Tick for u64 {}
impl Tick for u128 {}
impl Tick for usize {}

/// A natural number or the distinguished value `Infinity`, which compares
/// greater than every finite point.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum TimePoint<T> {
    Finite(T),
    Infinity,
}

impl<T: Tick> TimePoint<T> {
    pub fn finite(self) -> Option<T> {
        match self {
            TimePoint::Finite(t) => Some(t),
            TimePoint::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, TimePoint::Infinity)
    }
}

impl<T> From<T> for TimePoint<T> {
    fn from(t: T) -> Self {
        TimePoint::Finite(t)
    }
}

impl<T: Display> Display for TimePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimePoint::Finite(t) => write!(f, "{t}"),
            TimePoint::Infinity => f.write_str("inf"),
        }
    }
}

/// Half-open interval `[start, end)` over discrete time; `end` may be
/// `Infinity`. Always nonempty. Orders by start, then end.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct ClopenInterval<T> {
    start: T,
    end: TimePoint<T>,
}

impl<T: Tick> ClopenInterval<T> {
    pub fn new(start: T, end: TimePoint<T>) -> Result<Self> {
        if TimePoint::Finite(start) >= end {
            return Err(Error::InvalidArgument(format!(
                "interval [{start},{end}) is empty"
            )));
        }
        Ok(ClopenInterval { start, end })
    }

    /// `[start, end)` with a finite end.
    pub fn bounded(start: T, end: T) -> Result<Self> {
        Self::new(start, TimePoint::Finite(end))
    }

    /// `[start, inf)`.
    pub fn unbounded(start: T) -> Self {
        ClopenInterval {
            start,
            end: TimePoint::Infinity,
        }
    }

    pub fn start(&self) -> T {
        self.start
    }

    pub fn end(&self) -> TimePoint<T> {
        self.end
    }

    pub fn is_bounded(&self) -> bool {
        !self.end.is_infinite()
    }

    pub fn contains_point(&self, t: T) -> bool {
        self.start <= t && TimePoint::Finite(t) < self.end
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        TimePoint::Finite(other.start) >= self.end || TimePoint::Finite(self.start) >= other.end
    }

    /// Equal or disjoint: the pairwise condition of a normalized instance.
    pub fn is_aligned_with(&self, other: &Self) -> bool {
        self == other || self.is_disjoint(other)
    }

    /// The largest finite endpoint of the interval.
    pub fn max_finite_endpoint(&self) -> T {
        self.end.finite().unwrap_or(self.start)
    }

    /// The points of the interval strictly below `horizon`, in order.
    pub fn points_below(&self, horizon: T) -> impl Iterator<Item = T> {
        let stop = match self.end {
            TimePoint::Finite(e) => e.min(horizon),
            TimePoint::Infinity => horizon,
        };
        let mut next = self.start;
        std::iter::from_fn(move || {
            if next < stop {
                let t = next;
                next = next + T::one();
                Some(t)
            } else {
                None
            }
        })
    }
}

impl<T: Display> Display for ClopenInterval<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// Membership of a finite point in the set denoted by `iv`.
pub fn interval_contains<T: Tick>(iv: &ClopenInterval<T>, t: TimePoint<T>) -> Result<bool> {
    match t {
        TimePoint::Finite(t) => Ok(iv.contains_point(t)),
        TimePoint::Infinity => Err(Error::InvalidArgument(
            "infinity is not a member of any interval".into(),
        )),
    }
}

/// Sorted, duplicate-free list of every finite endpoint of `intervals`.
pub fn build_grid<'a, T, I>(intervals: I) -> Vec<T>
where
    T: Tick,
    I: IntoIterator<Item = &'a ClopenInterval<T>>,
{
    let mut grid: Vec<T> = intervals
        .into_iter()
        .flat_map(|iv| std::iter::once(iv.start).chain(iv.end.finite()))
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Cut `iv` at every grid point strictly inside it.
///
/// `grid` must be sorted and duplicate-free.
pub fn split_interval<T: Tick>(iv: &ClopenInterval<T>, grid: &[T]) -> Vec<ClopenInterval<T>> {
    let first = grid.partition_point(|&g| g <= iv.start);
    let cuts = grid[first..]
        .iter()
        .copied()
        .take_while(|&g| TimePoint::Finite(g) < iv.end);

    let mut pieces = Vec::new();
    let mut start = iv.start;
    for cut in cuts {
        pieces.push(ClopenInterval {
            start,
            end: TimePoint::Finite(cut),
        });
        start = cut;
    }
    pieces.push(ClopenInterval { start, end: iv.end });
    pieces
}
