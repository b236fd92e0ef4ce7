//! Multi-level uniform grid over the bounding box of the window.
//!
//! Level `l` has cells of edge `h 4^l`. A grain goes to the lowest level whose
//! cell edge is at least the width of its bounding box, so it touches at most
//! two cells per axis there; the coarsest level is a single cell and takes
//! whatever is left. A query visits one cell per level.

use crate::grains::GrainSample;

#[derive(Clone, Debug)]
struct Level {
    cell: f64,
    dims: Vec<usize>,
    offsets: Vec<u32>,
    items: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct GridIndex {
    lo: Vec<f64>,
    hi: Vec<f64>,
    levels: Vec<Level>,
}

impl GridIndex {
    /// Builds the index over the box `[-half, half]` for grains at `positions`
    /// (flat `nu`-vectors).
    pub fn build(half: &[f64], positions: &[f64], grains: &[GrainSample]) -> Self {
        let nu = half.len();
        let lo: Vec<f64> = half.iter().map(|e| -e).collect();
        let hi: Vec<f64> = half.to_vec();
        let span = half.iter().map(|e| 2.0 * e).fold(0.0, f64::max).max(f64::MIN_POSITIVE);

        let mut widths: Vec<f64> = grains
            .iter()
            .map(|g| (0..nu).map(|a| g.extent(a).1 - g.extent(a).0).fold(0.0, f64::max))
            .filter(|w| *w > 0.0)
            .collect();
        let mut cell = if widths.is_empty() {
            span
        } else {
            let mid = widths.len() / 2;
            *widths.select_nth_unstable_by(mid, f64::total_cmp).1
        };
        // Cap the number of finest cells to keep memory linear in the germ count.
        let max_cells = (4 * grains.len()).max(1024) as f64;
        let cells_at = |c: f64| half.iter().map(|e| (2.0 * e / c).ceil().max(1.0)).product::<f64>();
        while cells_at(cell) > max_cells {
            cell *= 2.0;
        }

        let mut level_cells = Vec::new();
        loop {
            level_cells.push(cell);
            if half.iter().all(|e| 2.0 * e <= cell) {
                break;
            }
            cell *= 4.0;
        }
        let top = level_cells.len() - 1;

        // (level, first cell, last cell) per axis for each indexed grain.
        let mut placement: Vec<(usize, Vec<(usize, usize)>)> = Vec::with_capacity(grains.len());
        let mut owner: Vec<u32> = Vec::with_capacity(grains.len());
        for (j, g) in grains.iter().enumerate() {
            let u = &positions[j * nu..(j + 1) * nu];
            let mut blo = vec![0.0; nu];
            let mut bhi = vec![0.0; nu];
            let mut width: f64 = 0.0;
            let mut misses = false;
            for a in 0..nu {
                let (el, eh) = g.extent(a);
                blo[a] = (u[a] + el).max(lo[a]);
                bhi[a] = (u[a] + eh).min(hi[a]);
                if blo[a] > bhi[a] {
                    misses = true;
                }
                width = width.max(eh - el);
            }
            if misses {
                continue;
            }
            let level = level_cells.iter().position(|c| *c >= width).unwrap_or(top);
            let c = level_cells[level];
            let ranges = (0..nu)
                .map(|a| {
                    let n = ((2.0 * half[a] / c).ceil() as usize).max(1);
                    let i0 = (((blo[a] - lo[a]) / c).floor() as usize).min(n - 1);
                    let i1 = (((bhi[a] - lo[a]) / c).floor() as usize).min(n - 1);
                    (i0, i1)
                })
                .collect();
            placement.push((level, ranges));
            owner.push(j as u32);
        }

        let mut levels: Vec<Level> = level_cells
            .iter()
            .map(|&c| {
                let dims: Vec<usize> = half.iter().map(|e| ((2.0 * e / c).ceil() as usize).max(1)).collect();
                let n: usize = dims.iter().product();
                Level { cell: c, dims, offsets: vec![0; n + 1], items: Vec::new() }
            })
            .collect();
        for pass in 0..2 {
            if pass == 1 {
                for lv in levels.iter_mut() {
                    for i in 1..lv.offsets.len() {
                        lv.offsets[i] += lv.offsets[i - 1];
                    }
                    lv.items = vec![0; *lv.offsets.last().unwrap() as usize];
                }
            }
            let mut fill: Vec<Vec<u32>> = if pass == 1 {
                levels.iter().map(|lv| lv.offsets[..lv.offsets.len() - 1].to_vec()).collect()
            } else {
                Vec::new()
            };
            for ((level, ranges), &j) in placement.iter().zip(&owner) {
                let lv = &mut levels[*level];
                let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                loop {
                    let mut flat = 0;
                    for a in (0..nu).rev() {
                        flat = flat * lv.dims[a] + idx[a];
                    }
                    if pass == 0 {
                        lv.offsets[flat + 1] += 1;
                    } else {
                        let slot = &mut fill[*level][flat];
                        lv.items[*slot as usize] = j;
                        *slot += 1;
                    }
                    let mut a = 0;
                    loop {
                        if a == nu {
                            break;
                        }
                        idx[a] += 1;
                        if idx[a] <= ranges[a].1 {
                            break;
                        }
                        idx[a] = ranges[a].0;
                        a += 1;
                    }
                    if a == nu {
                        break;
                    }
                }
            }
        }
        Self { lo, hi, levels }
    }

    /// Whether `t` lies in the indexed region.
    pub fn covers(&self, t: &[f64]) -> bool {
        t.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| *x >= *l && *x <= *h)
    }

    /// Calls `f` with every grain id whose bounding box may contain `t`.
    /// `t` must be inside the indexed region.
    pub fn for_each_candidate(&self, t: &[f64], mut f: impl FnMut(usize)) {
        let nu = self.lo.len();
        for lv in &self.levels {
            let mut flat = 0;
            for a in (0..nu).rev() {
                let i = (((t[a] - self.lo[a]) / lv.cell).floor().max(0.0) as usize).min(lv.dims[a] - 1);
                flat = flat * lv.dims[a] + i;
            }
            let (s, e) = (lv.offsets[flat] as usize, lv.offsets[flat + 1] as usize);
            for &j in &lv.items[s..e] {
                f(j as usize);
            }
        }
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }
}
