//! Scatter plot of a labeled dataset. Data with more than two columns is
//! projected onto its first two principal components.

use dlcc::linalg::{covariance, sorted_eigen};
use dlcc::DataMatrix;
use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

fn project(x: &DataMatrix) -> (Vec<[f64; 2]>, Option<&'static str>) {
    match x.ncols() {
        1 => (x.rows().map(|r| [r[0], 0.0]).collect(), None),
        2 => (x.rows().map(|r| [r[0], r[1]]).collect(), None),
        d => {
            let (mean, cov) = covariance(x.rows(), d);
            let (_, vecs) = sorted_eigen(&cov);
            let pts = x
                .rows()
                .map(|r| {
                    let mut p = [0.0; 2];
                    for (k, pk) in p.iter_mut().enumerate() {
                        *pk = (0..d).map(|j| (r[j] - mean[j]) * vecs[(j, k)]).sum();
                    }
                    p
                })
                .collect();
            (
                pts,
                Some("projection onto the first two principal components"),
            )
        }
    }
}

pub fn scatter_svg(x: &DataMatrix, labels: &[usize]) -> String {
    let (pts, caption) = project(x);
    let (w, h, pad) = (640.0, 640.0, 40.0);
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for p in &pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    let sx = if x1 > x0 {
        (w - 2.0 * pad) / (x1 - x0)
    } else {
        1.0
    };
    let sy = if y1 > y0 {
        (h - 2.0 * pad) / (y1 - y0)
    } else {
        1.0
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (p, &l) in pts.iter().zip(labels) {
        let cx = pad + (p[0] - x0) * sx;
        let cy = h - pad - (p[1] - y0) * sy;
        let _ = writeln!(
            out,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="{}" fill-opacity="0.8"/>"#,
            PALETTE[l % PALETTE.len()]
        );
    }
    if let Some(c) = caption {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{c}</text>"#,
            w / 2.0,
            h - 12.0
        );
    }
    out.push_str("</svg>\n");
    out
}
