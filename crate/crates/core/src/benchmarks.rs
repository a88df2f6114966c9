//! Fixed-position reference layouts and the 12-grid hotspot user layouts.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::channel::{ArrayLayout, SubarrayGeometry};
use crate::geom::Vec3;
use crate::scenario::{CoverageSpec, MaRegionSpec, Scenario};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    #[serde(rename = "sparse_2x4")]
    Sparse2x4,
    HorizontalSparse,
    VerticalSparse,
    DenseUla,
    DenseUpa,
}

impl BenchmarkKind {
    pub const ALL: [BenchmarkKind; 5] = [
        BenchmarkKind::Sparse2x4,
        BenchmarkKind::HorizontalSparse,
        BenchmarkKind::VerticalSparse,
        BenchmarkKind::DenseUla,
        BenchmarkKind::DenseUpa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::Sparse2x4 => "sparse_2x4",
            BenchmarkKind::HorizontalSparse => "horizontal_sparse",
            BenchmarkKind::VerticalSparse => "vertical_sparse",
            BenchmarkKind::DenseUla => "dense_ula",
            BenchmarkKind::DenseUpa => "dense_upa",
        }
    }
}

impl fmt::Display for BenchmarkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("scheme", format!("unknown benchmark `{s}`")))
    }
}

/// `⌊x⌉`, half away from zero.
pub fn round_half_away(x: f64) -> usize {
    x.round() as usize
}

fn distinct(field: &str, idx: &[usize]) -> Result<()> {
    let mut sorted = idx.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::config(
            field,
            "the region is too small for this layout: positions coincide",
        ));
    }
    Ok(())
}

/// Candidate indices (0-based) of a sparse layout, in slot order.
pub fn sparse_positions(kind: BenchmarkKind, ma: &MaRegionSpec, n: usize) -> Result<Vec<usize>> {
    let field = kind.name();
    let (ny, nz) = (ma.n_y, ma.n_z);
    let pos = match kind {
        BenchmarkKind::HorizontalSparse => {
            if n < 2 {
                return Err(Error::config(field, "needs at least two subarrays"));
            }
            (1..=n)
                .map(|s| {
                    let iy = round_half_away((ny - 1) as f64 / (n - 1) as f64 * (s - 1) as f64 + 1.0);
                    ma.index(iy - 1, 0)
                })
                .collect::<Vec<_>>()
        }
        BenchmarkKind::VerticalSparse => {
            if n < 2 {
                return Err(Error::config(field, "needs at least two subarrays"));
            }
            let col = ny.div_ceil(2);
            (1..=n)
                .map(|s| {
                    let iz = round_half_away((nz - 1) as f64 / (n - 1) as f64 * (s - 1) as f64 + 1.0);
                    ma.index(col - 1, iz - 1)
                })
                .collect()
        }
        BenchmarkKind::Sparse2x4 => {
            if n != 8 {
                return Err(Error::config(field, format!("needs exactly 8 subarrays, got {n}")));
            }
            (0..8)
                .map(|s| {
                    let (row, c) = (s / 4, s % 4);
                    let iy = round_half_away((ny - 1) as f64 / 3.0 * c as f64 + 1.0);
                    let iz = if row == 0 { 1 } else { nz };
                    ma.index(iy - 1, iz - 1)
                })
                .collect()
        }
        BenchmarkKind::DenseUla | BenchmarkKind::DenseUpa => {
            return Err(Error::config(field, "dense layouts are not built from candidates"));
        }
    };
    distinct(field, &pos)?;
    Ok(pos)
}

/// Center of the dense arrays: the candidate at the middle of each axis.
pub fn dense_center(ma: &MaRegionSpec) -> Vec3 {
    ma.position(ma.index(ma.n_y.div_ceil(2) - 1, ma.n_z.div_ceil(2) - 1))
}

/// Builds a baseline layout for the scenario's `N` and subarray size.
pub fn fpa_layout(kind: BenchmarkKind, scenario: &Scenario) -> Result<ArrayLayout> {
    let n = scenario.n_subarrays();
    let g = scenario.config.subarray;
    let lambda = scenario.wavelength();
    let half = lambda / 2.0;
    match kind {
        BenchmarkKind::DenseUla => {
            let m = g.m();
            let geom = SubarrayGeometry::half_wave(m, 1, lambda);
            let c = dense_center(&scenario.config.ma_region);
            let step = m as f64 * half;
            let centers: Vec<Vec3> = (0..n)
                .map(|j| [c[0], c[1] + (j as f64 - (n as f64 - 1.0) / 2.0) * step, c[2]])
                .collect();
            ArrayLayout::uniform(&centers, geom)
        }
        BenchmarkKind::DenseUpa => {
            if !n.is_multiple_of(2) {
                return Err(Error::config(
                    "dense_upa",
                    format!("needs an even number of subarrays, got {n}"),
                ));
            }
            let geom = SubarrayGeometry::half_wave(g.m_h, g.m_v, lambda);
            let c = dense_center(&scenario.config.ma_region);
            let cols = n / 2;
            let (step_y, step_z) = (g.m_h as f64 * half, g.m_v as f64 * half);
            let mut centers = Vec::with_capacity(n);
            for row in 0..2 {
                for col in 0..cols {
                    centers.push([
                        c[0],
                        c[1] + (col as f64 - (cols as f64 - 1.0) / 2.0) * step_y,
                        c[2] + (row as f64 - 0.5) * step_z,
                    ]);
                }
            }
            ArrayLayout::uniform(&centers, geom)
        }
        _ => {
            let pos = sparse_positions(kind, &scenario.config.ma_region, n)?;
            ArrayLayout::from_candidates(scenario, &pos)
        }
    }
}

/// The 12 hotspot grids of layout type 1, 2 or 3, as 0-based linear indices.
pub fn hotspot_type(type_id: u8, cov: &CoverageSpec) -> Result<Vec<usize>> {
    let field = "distribution.type_id";
    let (kx, ky, kz) = (cov.k_x as i64, cov.k_y as i64, cov.k_z as i64);
    // 1-based (k_x, k_y, k_z) triples
    let triples: Vec<(i64, i64, i64)> = match type_id {
        1 => (1..=12)
            .map(|k| (1, ((ky - 1) as f64 / 11.0 * (k - 1) as f64 + 1.0).round() as i64, 1))
            .collect(),
        2 => {
            let mid = (ky + 1) / 2;
            (1..=12)
                .map(|k| {
                    let y = if k <= 6 { mid - 4 } else { mid + 4 };
                    let z = (1.0 + ((k - 1) % 6) as f64 * (kz - 1) as f64 / 5.0).round() as i64;
                    (1, y, z)
                })
                .collect()
        }
        3 => {
            let ys = [2, 3, 4, ky - 3, ky - 2, ky - 1];
            [kz - 2, kz]
                .into_iter()
                .flat_map(|z| ys.into_iter().map(move |y| (2, y, z)))
                .collect()
        }
        _ => return Err(Error::config(field, format!("unknown hotspot type {type_id}"))),
    };
    let mut out = Vec::with_capacity(12);
    for (x, y, z) in triples {
        if !(1..=kx).contains(&x) || !(1..=ky).contains(&y) || !(1..=kz).contains(&z) {
            return Err(Error::config(
                field,
                format!("type {type_id} grid ({x}, {y}, {z}) lies outside the {kx}×{ky}×{kz} coverage grid"),
            ));
        }
        out.push(cov.index((x - 1) as usize, (y - 1) as usize, (z - 1) as usize));
    }
    distinct(field, &out)?;
    Ok(out)
}
