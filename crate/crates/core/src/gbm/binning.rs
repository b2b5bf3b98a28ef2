use serde::{Deserialize, Serialize};

/// Per-feature bin edges. A value `x` falls in bin `#{edges < x}`, so bin `b`
/// holds exactly the values with `edges[b-1] < x <= edges[b]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMapper {
    pub edges: Vec<f64>,
}

impl BinMapper {
    /// Builds edges from a feature column.
    ///
    /// With at most `max_bins` distinct values every value gets its own bin
    /// and edges are midpoints between neighbours; otherwise edges are taken
    /// at evenly spaced ranks of the sorted column.
    pub fn fit(column: &[f64], max_bins: usize) -> Self {
        let mut sorted = column.to_vec();
        sorted.sort_unstable_by(f64::total_cmp);
        let mut uniq = sorted.clone();
        uniq.dedup();
        let max_bins = max_bins.max(2);
        let edges = if uniq.len() <= max_bins {
            uniq.windows(2).map(|w| midpoint(w[0], w[1])).collect()
        } else {
            let n = sorted.len();
            let mut edges: Vec<f64> = Vec::with_capacity(max_bins - 1);
            for i in 1..max_bins {
                let rank = i * n / max_bins;
                let below = sorted[rank - 1];
                // first distinct value above `below`
                let idx = uniq.partition_point(|&u| u <= below);
                if idx < uniq.len() {
                    let e = midpoint(below, uniq[idx]);
                    if edges.last().is_none_or(|&last| e > last) {
                        edges.push(e);
                    }
                }
            }
            edges
        };
        Self { edges }
    }

    pub fn n_bins(&self) -> usize {
        self.edges.len() + 1
    }

    #[inline]
    pub fn bin(&self, x: f64) -> u16 {
        self.edges.partition_point(|&e| e < x) as u16
    }

    /// Upper edge of bin `b`, used as the split threshold.
    pub fn threshold(&self, b: usize) -> f64 {
        self.edges[b]
    }
}

#[inline]
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + 0.5 * (b - a);
    // guard against rounding onto the upper neighbour
    if m < b {
        m
    } else {
        a
    }
}

/// Column-major binned feature matrix.
#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub n_rows: usize,
    pub mappers: Vec<BinMapper>,
    pub columns: Vec<Vec<u16>>,
}

impl BinnedMatrix {
    pub fn from_rows(rows: &[Vec<f64>], n_features: usize, max_bins: usize) -> Self {
        use rayon::prelude::*;
        let (mappers, columns) = (0..n_features)
            .into_par_iter()
            .map(|f| {
                let col: Vec<f64> = rows.iter().map(|r| r[f]).collect();
                let mapper = BinMapper::fit(&col, max_bins);
                let binned = col.iter().map(|&x| mapper.bin(x)).collect();
                (mapper, binned)
            })
            .unzip();
        Self {
            n_rows: rows.len(),
            mappers,
            columns,
        }
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }
}
